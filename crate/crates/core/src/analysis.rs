//! Trace analysis: firing rates, least-squares error of a candidate
//! solution, and tunability sweeps over neuron biasing and synapse design
//! parameters.

use crate::circuit::{synapse_rhs, NeuronParams, SynapseParams, SynapseState};
use crate::error::{Error, Result};
use crate::graph::{assemble, InputDrive, NetworkGraph};
use crate::integrator::{simulate, IntegratorConfig, SimulationTrace};
use crate::parallel;

/// Cumulative spike counts and rates `N(t)/t` sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct RateSeries {
    /// Sample instants (ns), starting at 0.
    pub times: Vec<f64>,
    /// Per-neuron cumulative spike count at each sample.
    pub counts: Vec<Vec<usize>>,
    /// Per-neuron rate `N(t)/t` (1/ns); defined as 0 at `t = 0`.
    pub rates: Vec<Vec<f64>>,
}

impl RateSeries {
    /// Rates at the final sample.
    pub fn final_rates(&self) -> Vec<f64> {
        self.rates
            .iter()
            .map(|r| r.last().copied().unwrap_or(0.0))
            .collect()
    }
}

/// Compute cumulative firing rates `N(t)/t` from a trace's spike events.
pub fn firing_rates(trace: &SimulationTrace, sample_dt: f64) -> Result<RateSeries> {
    if !(sample_dt > 0.0) {
        return Err(Error::Analysis("sample_dt must be positive".into()));
    }
    let n = trace.spike_events.len();
    let mut times = vec![0.0];
    let mut t = sample_dt;
    while t < trace.t_end - 1e-12 {
        times.push(t);
        t += sample_dt;
    }
    times.push(trace.t_end);
    let mut counts = vec![Vec::with_capacity(times.len()); n];
    let mut rates = vec![Vec::with_capacity(times.len()); n];
    for k in 0..n {
        let spikes = &trace.spike_events[k];
        let mut idx = 0;
        for &ts in &times {
            while idx < spikes.len() && spikes[idx] <= ts {
                idx += 1;
            }
            counts[k].push(idx);
            rates[k].push(if ts > 0.0 { idx as f64 / ts } else { 0.0 });
        }
    }
    Ok(RateSeries {
        times,
        counts,
        rates,
    })
}

/// Normalized least-squares error `‖A x − b‖₂ / ‖b‖₂`.
pub fn lsq_error(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.iter().any(|row| row.len() != x.len()) {
        return Err(Error::Analysis(format!(
            "dimension mismatch: A is {}x{:?}, b has {}, x has {}",
            a.len(),
            a.first().map(|r| r.len()),
            b.len(),
            x.len()
        )));
    }
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Err(Error::Analysis(
            "lsq_error is undefined for b = 0 (zero normalization)".into(),
        ));
    }
    let mut resid = 0.0;
    for (row, bi) in a.iter().zip(b.iter()) {
        let ax: f64 = row.iter().zip(x.iter()).map(|(aij, xj)| aij * xj).sum();
        resid += (ax - bi) * (ax - bi);
    }
    Ok(resid.sqrt() / b_norm)
}

/// One cell of a firing-rate map sweep.
#[derive(Debug, Clone)]
pub struct RateCell {
    pub i_in_ua: f64,
    pub i_bias_ua: f64,
    /// Steady-state firing rate (1/ns); 0 below the firing threshold.
    pub rate: Option<f64>,
    /// Error message if the cell's simulation failed.
    pub error: Option<String>,
}

/// Firing-rate colour map of an isolated neuron over an
/// `(I_in, I_bias)` grid. Each cell runs an independent simulation at a
/// constant drive; the steady rate is taken over the last half of the
/// horizon, discarding the activation transient.
pub fn sweep_firing_map(
    p: &NeuronParams,
    i_in_range: (f64, f64),
    i_bias_range: (f64, f64),
    grid: (usize, usize),
    horizon_ns: f64,
) -> Result<Vec<RateCell>> {
    if grid.0 < 2 || grid.1 < 2 {
        return Err(Error::Analysis("sweep grid must be at least 2x2".into()));
    }
    if !(i_in_range.0.is_finite()
        && i_in_range.1.is_finite()
        && i_bias_range.0.is_finite()
        && i_bias_range.1.is_finite())
    {
        return Err(Error::Analysis("sweep ranges must be finite".into()));
    }
    let mut cells = Vec::with_capacity(grid.0 * grid.1);
    for r in 0..grid.0 {
        for c in 0..grid.1 {
            let i_in = lerp(i_in_range, r, grid.0);
            let i_bias = lerp(i_bias_range, c, grid.1);
            cells.push((i_in, i_bias));
        }
    }
    let p = *p;
    let results = parallel::map_indexed(cells, move |_, (i_in, i_bias)| {
        let mut params = p;
        params.i_bias = i_bias;
        match steady_state_rate(&params, i_in, horizon_ns) {
            Ok(rate) => RateCell {
                i_in_ua: i_in,
                i_bias_ua: i_bias,
                rate: Some(rate),
                error: None,
            },
            Err(e) => RateCell {
                i_in_ua: i_in,
                i_bias_ua: i_bias,
                rate: None,
                error: Some(e.to_string()),
            },
        }
    });
    Ok(results)
}

fn lerp(range: (f64, f64), idx: usize, n: usize) -> f64 {
    range.0 + (range.1 - range.0) * idx as f64 / (n - 1) as f64
}

/// Steady-state firing rate of an isolated neuron under a constant drive:
/// spikes in the last half of the horizon divided by that window.
pub fn steady_state_rate(p: &NeuronParams, i_in_ua: f64, horizon_ns: f64) -> Result<f64> {
    let mut g = NetworkGraph::default();
    g.add_neuron("n", *p, InputDrive::constant(i_in_ua));
    let net = assemble(&g)?;
    let cfg = IntegratorConfig::default().with_t_end(horizon_ns);
    let trace = simulate(&net, &cfg)?;
    let half = horizon_ns / 2.0;
    let n_late = trace.spike_events[0].iter().filter(|&&t| t >= half).count();
    Ok(n_late as f64 / half)
}

/// Mean inter-spike interval over the last half of the horizon, if the
/// neuron fires at least twice there.
pub fn steady_state_period(
    p: &NeuronParams,
    i_in_ua: f64,
    horizon_ns: f64,
) -> Result<Option<f64>> {
    let mut g = NetworkGraph::default();
    g.add_neuron("n", *p, InputDrive::constant(i_in_ua));
    let net = assemble(&g)?;
    let cfg = IntegratorConfig::default().with_t_end(horizon_ns);
    let trace = simulate(&net, &cfg)?;
    let half = horizon_ns / 2.0;
    let late: Vec<f64> = trace.spike_events[0]
        .iter()
        .copied()
        .filter(|&t| t >= half)
        .collect();
    if late.len() < 2 {
        return Ok(None);
    }
    Ok(Some(
        (late[late.len() - 1] - late[0]) / (late.len() - 1) as f64,
    ))
}

/// A synthetic upstream spike train driving a synapse's hTron directly:
/// the channel flag is forced to 1 for `width_ns` after each spike time.
#[derive(Debug, Clone)]
pub struct SpikeTrainStim {
    pub times_ns: Vec<f64>,
    pub width_ns: f64,
}

impl SpikeTrainStim {
    /// Regular train: `n` spikes starting at `t0` with period `period_ns`.
    pub fn regular(t0: f64, period_ns: f64, n: usize, width_ns: f64) -> Self {
        Self {
            times_ns: (0..n).map(|k| t0 + k as f64 * period_ns).collect(),
            width_ns,
        }
    }

    fn h_at(&self, t: f64) -> u8 {
        for &t0 in &self.times_ns {
            if t >= t0 && t < t0 + self.width_ns {
                return 1;
            }
        }
        0
    }
}

/// Time series of one synapse's integration-loop and output currents under
/// a forced upstream spike train.
#[derive(Debug, Clone)]
pub struct SynapseTrace {
    pub times: Vec<f64>,
    /// Integration-loop current `i3` (µA).
    pub i3: Vec<f64>,
    /// Output current `i5` (µA).
    pub i5: Vec<f64>,
}

impl SynapseTrace {
    /// Peak magnitude of the output current.
    pub fn peak_i5(&self) -> f64 {
        self.i5.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Time for `|i3|` to fall from its peak to `1/e` of the peak; `None`
    /// if it never decays that far within the trace.
    pub fn i3_decay_time(&self) -> Option<f64> {
        let (peak_idx, peak) = self
            .i3
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            });
        let target = peak / std::f64::consts::E;
        for i in peak_idx..self.i3.len() {
            if self.i3[i].abs() <= target {
                return Some(self.times[i] - self.times[peak_idx]);
            }
        }
        None
    }
}

/// Integrate a synapse alone under a forced upstream spike train
/// (fixed-step RK4; the synapse subsystem is non-stiff at these scales).
pub fn simulate_synapse_train(
    p: &SynapseParams,
    stim: &SpikeTrainStim,
    t_end_ns: f64,
    dt_ns: f64,
) -> Result<SynapseTrace> {
    p.validate()?;
    if !(dt_ns > 0.0 && t_end_ns > 0.0) {
        return Err(Error::Analysis("dt and t_end must be positive".into()));
    }
    let mut s = SynapseState {
        i: [p.i_bias_h, 0.0, 0.0, 0.0, 0.0],
        h: 0,
    };
    let sample_every = ((t_end_ns / dt_ns / 4096.0).ceil() as usize).max(1);
    let n_steps = (t_end_ns / dt_ns).ceil() as usize;
    let mut out = SynapseTrace {
        times: Vec::new(),
        i3: Vec::new(),
        i5: Vec::new(),
    };
    let rk4 = |s: &SynapseState, dt: f64| -> Result<[f64; 5]> {
        let k1 = synapse_rhs(s, p)?;
        let mut s2 = *s;
        for i in 0..5 {
            s2.i[i] = s.i[i] + 0.5 * dt * k1[i];
        }
        let k2 = synapse_rhs(&s2, p)?;
        let mut s3 = *s;
        for i in 0..5 {
            s3.i[i] = s.i[i] + 0.5 * dt * k2[i];
        }
        let k3 = synapse_rhs(&s3, p)?;
        let mut s4 = *s;
        for i in 0..5 {
            s4.i[i] = s.i[i] + dt * k3[i];
        }
        let k4 = synapse_rhs(&s4, p)?;
        let mut d = [0.0; 5];
        for i in 0..5 {
            d[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        Ok(d)
    };
    for step in 0..=n_steps {
        let t = step as f64 * dt_ns;
        // Forced channel state: on during a stim window, otherwise it
        // retraps once the channel current is below I_r,h.
        s.h = if stim.h_at(t) == 1 {
            1
        } else {
            crate::integrator::synapse_forced_update(p, s.h, s.i[0], 0)
        };
        if step % sample_every == 0 {
            out.times.push(t);
            out.i3.push(s.i[2]);
            out.i5.push(s.i[4]);
        }
        if step < n_steps {
            let d = rk4(&s, dt_ns)?;
            for i in 0..5 {
                s.i[i] += dt_ns * d[i];
            }
        }
    }
    Ok(out)
}

/// Synapse design-space sweep: either the integration-loop inductance or
/// the bias current is varied, all else fixed, under one upstream train.
#[derive(Debug, Clone, Copy)]
pub enum SynapseSweepAxis {
    LSyn,
    IBiasH,
}

pub fn sweep_synapse(
    p: &SynapseParams,
    axis: SynapseSweepAxis,
    values: &[f64],
    stim: &SpikeTrainStim,
    t_end_ns: f64,
) -> Result<Vec<(f64, SynapseTrace)>> {
    if values.is_empty() {
        return Err(Error::Analysis("sweep values must be nonempty".into()));
    }
    let p = *p;
    let stim = stim.clone();
    let jobs: Vec<f64> = values.to_vec();
    let results = parallel::map_indexed(jobs, move |_, v| {
        let mut params = p;
        match axis {
            SynapseSweepAxis::LSyn => params.l_syn = v,
            SynapseSweepAxis::IBiasH => params.i_bias_h = v,
        }
        simulate_synapse_train(&params, &stim, t_end_ns, 0.01).map(|tr| (v, tr))
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::NanowireParams;
    use approx::assert_relative_eq;

    fn trace_with_spikes(spikes: Vec<Vec<f64>>, t_end: f64) -> SimulationTrace {
        SimulationTrace {
            times: vec![0.0, t_end],
            states: vec![vec![], vec![]],
            flags: vec![vec![], vec![]],
            spike_events: spikes,
            switch_events: vec![],
            state_labels: vec![],
            flag_labels: vec![],
            t_end,
        }
    }

    fn synapse() -> SynapseParams {
        SynapseParams {
            channel: NanowireParams::new(100.0, 30.0),
            l_syn: 1000.0,
            r_syn1: 10.0,
            r_syn2: 10.0,
            r_out: 5.0,
            l_out: 20.0,
            i_bias_h: 27.0,
            beta: 0.5,
        }
    }

    #[test]
    fn rates_count_over_time() {
        let trace = trace_with_spikes(vec![vec![10.0, 20.0, 30.0]], 30.0);
        let rs = firing_rates(&trace, 10.0).unwrap();
        assert_eq!(rs.times, vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(rs.counts[0], vec![0, 1, 2, 3]);
        assert_relative_eq!(rs.rates[0][3], 0.1);
        assert_eq!(rs.rates[0][0], 0.0);
    }

    #[test]
    fn rates_zero_without_spikes() {
        let trace = trace_with_spikes(vec![vec![]], 50.0);
        let rs = firing_rates(&trace, 5.0).unwrap();
        assert!(rs.rates[0].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rates_invariant_under_resampling() {
        let trace = trace_with_spikes(vec![vec![3.0, 7.0, 19.0, 23.0]], 40.0);
        let a = firing_rates(&trace, 10.0).unwrap();
        let b = firing_rates(&trace, 5.0).unwrap();
        // Common instants 0, 10, 20, 30, 40 agree exactly.
        for (i, &t) in a.times.iter().enumerate() {
            let j = b.times.iter().position(|&u| u == t).unwrap();
            assert_eq!(a.counts[0][i], b.counts[0][j]);
            assert_eq!(a.rates[0][i], b.rates[0][j]);
        }
    }

    #[test]
    fn lsq_error_exact_solution_is_zero() {
        let a = vec![vec![1.0, -0.5], vec![-0.5, 1.0]];
        let b = vec![0.5, 3.5];
        let x = vec![3.0, 5.0];
        assert_relative_eq!(lsq_error(&a, &b, &x).unwrap(), 0.0);
    }

    #[test]
    fn lsq_error_zero_candidate_is_one() {
        let a = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
        let b = vec![1.0, -2.0];
        assert_relative_eq!(lsq_error(&a, &b, &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn lsq_error_cycle_system_sign_corrected() {
        // 5-node cycle matrix; the consistent right-hand side has
        // b5 = +2.5 for the solution x = [0,1,2,3,4].
        let a = cycle_matrix();
        let b = vec![-2.5, 0.0, 0.0, 0.0, 2.5];
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(lsq_error(&a, &b, &x).unwrap() < 1e-14);
    }

    #[test]
    fn lsq_error_scaling_invariance() {
        let a = vec![vec![1.0, -0.5], vec![-0.5, 1.0]];
        let b = vec![0.5, 3.5];
        let x = vec![2.0, 4.0];
        let e1 = lsq_error(&a, &b, &x).unwrap();
        let s = -7.5;
        let a2: Vec<Vec<f64>> = a
            .iter()
            .map(|r| r.iter().map(|v| v * s).collect())
            .collect();
        let b2: Vec<f64> = b.iter().map(|v| v * s).collect();
        assert_relative_eq!(lsq_error(&a2, &b2, &x).unwrap(), e1, max_relative = 1e-12);
    }

    #[test]
    fn lsq_error_rejects_zero_b() {
        let a = vec![vec![1.0]];
        assert!(lsq_error(&a, &[0.0], &[1.0]).is_err());
    }

    fn cycle_matrix() -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; 5]; 5];
        for i in 0..5 {
            a[i][i] = 1.0;
            a[i][(i + 1) % 5] = -0.5;
            a[i][(i + 4) % 5] = -0.5;
        }
        a
    }

    #[test]
    fn synapse_train_zero_bias_gives_zero_output() {
        let mut p = synapse();
        p.i_bias_h = 0.0;
        let stim = SpikeTrainStim::regular(10.0, 20.0, 5, 1.0);
        let tr = simulate_synapse_train(&p, &stim, 200.0, 0.01).unwrap();
        assert!(tr.peak_i5() < 1e-12);
    }

    #[test]
    fn synapse_train_charges_loop() {
        let p = synapse();
        let stim = SpikeTrainStim::regular(10.0, 20.0, 10, 1.0);
        let tr = simulate_synapse_train(&p, &stim, 400.0, 0.01).unwrap();
        assert!(tr.peak_i5() > 0.1, "peak i5 = {}", tr.peak_i5());
        assert!(tr.i5.iter().cloned().fold(f64::MIN, f64::max) > 0.0);
    }

    #[test]
    fn synapse_train_negated_bias_negates_output() {
        let p = synapse();
        let stim = SpikeTrainStim::regular(10.0, 20.0, 10, 1.0);
        let pos = simulate_synapse_train(&p, &stim, 400.0, 0.01).unwrap();
        let mut pn = p;
        pn.i_bias_h = -p.i_bias_h;
        let neg = simulate_synapse_train(&pn, &stim, 400.0, 0.01).unwrap();
        for (u, v) in pos.i5.iter().zip(neg.i5.iter()) {
            assert_relative_eq!(*u, -*v, max_relative = 1e-9, epsilon = 1e-12);
        }
    }
}
