//! Hybrid-system integration.
//!
//! Between switching events the coupled state equations are smooth and are
//! integrated with an adaptive Dormand–Prince 5(4) scheme. Each threshold
//! crossing is localised by bisection (re-integrating from the last
//! accepted state) to within `dt_event`, the discrete flags are updated at
//! the event instant, and integration restarts. The hTron channels are
//! slaved to their source neuron's main-oscillator flag: `h = 1` whenever
//! the upstream `n2 = 1`.
//!
//! [`simulate_fixed_step_oracle`] is an independent forward-Euler
//! integrator with per-step threshold checks, used to cross-check spike
//! counts and times.

use crate::circuit::{
    effective_htron_threshold, neuron_rhs, synapse_rhs, update_switch, NeuronState, SynapseState,
};
use crate::error::{Error, Result};
use crate::graph::AssembledNetwork;
use crate::graph::{quiescent_state, NEURON_STATES, SYNAPSE_STATES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Integrator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    /// Relative tolerance of the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute tolerance (µA).
    pub abs_tol: f64,
    /// Maximum step (ns). Also bounds how far an event can hide inside a
    /// single step.
    pub dt_max: f64,
    /// Event-localisation tolerance (ns).
    pub dt_event: f64,
    /// Simulation horizon (ns).
    pub t_end: f64,
    /// Seed of the noise generator.
    pub seed: u64,
    /// Std-dev of the per-step Gaussian current perturbation applied to
    /// each nanowire current (µA); 0 disables noise entirely.
    pub noise_sigma: f64,
    /// Interval at which the trace records the full state (ns). Events are
    /// recorded in addition to the uniform grid.
    pub sample_dt: f64,
    /// Maximum switching events per element within any window of
    /// [`Self::chatter_window_ns`]; exceeding it aborts with an error
    /// naming the element.
    pub event_cap: usize,
    /// Window for the chattering cap (ns).
    pub chatter_window_ns: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            abs_tol: 1e-7,
            dt_max: 1.0,
            dt_event: 1e-4,
            t_end: 1000.0,
            seed: 0,
            noise_sigma: 0.0,
            sample_dt: 1.0,
            event_cap: 200,
            chatter_window_ns: 1.0,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "integrator tolerances must be positive".into(),
            ));
        }
        if !(self.dt_event > 0.0 && self.dt_event <= self.dt_max) {
            return Err(Error::InvalidParameter(
                "dt_event must be positive and no larger than dt_max".into(),
            ));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidParameter("t_end must be positive".into()));
        }
        if !(self.sample_dt > 0.0) {
            return Err(Error::InvalidParameter("sample_dt must be positive".into()));
        }
        Ok(())
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self.sample_dt = (t_end / 2048.0).max(self.dt_event);
        self
    }
}

/// Which element a switching event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementFlag {
    /// Control nanowire of neuron `k`.
    NeuronControl(usize),
    /// Main nanowire of neuron `k`; rising edges are spikes.
    NeuronMain(usize),
    /// hTron channel of synapse `m`.
    SynapseChannel(usize),
}

impl ElementFlag {
    pub fn label(&self, net: &AssembledNetwork) -> String {
        match self {
            ElementFlag::NeuronControl(k) => format!("{}.n1", net.neurons[*k].id),
            ElementFlag::NeuronMain(k) => format!("{}.n2", net.neurons[*k].id),
            ElementFlag::SynapseChannel(m) => {
                let s = &net.synapses[*m];
                format!("syn{}({}->{}).h", m, s.source, s.target)
            }
        }
    }
}

/// One discrete flag transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchEvent {
    pub t_ns: f64,
    pub element: ElementFlag,
    /// `true` for 0→1.
    pub rising: bool,
}

/// Full simulation output: sampled state time series plus event lists.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    /// Sample instants (ns), strictly increasing; the uniform grid plus
    /// every event instant.
    pub times: Vec<f64>,
    /// Full continuous state per instant, in network layout order.
    pub states: Vec<Vec<f64>>,
    /// Flag vector per instant.
    pub flags: Vec<Vec<u8>>,
    /// Per-neuron firing instants: times of `n2` rising edges.
    pub spike_events: Vec<Vec<f64>>,
    /// All flag transitions, in time order.
    pub switch_events: Vec<SwitchEvent>,
    /// Column labels matching `states` rows.
    pub state_labels: Vec<String>,
    /// Column labels matching `flags` rows.
    pub flag_labels: Vec<String>,
    /// Horizon actually integrated (ns).
    pub t_end: f64,
}

impl SimulationTrace {
    /// Index of the state column for synapse `m`'s variable `v` (0..5).
    pub fn synapse_column(&self, net: &AssembledNetwork, m: usize, v: usize) -> usize {
        net.synapse_offset(m) + v
    }

    /// Extract one state column as a time series.
    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|row| row[idx]).collect()
    }
}

/// Scratch for one full network right-hand-side evaluation.
struct RhsContext<'a> {
    net: &'a AssembledNetwork,
    /// Synapse output-current derivatives from the last evaluation, used
    /// to form each neuron's analytic `di_in/dt`.
    syn_deriv: Vec<[f64; 5]>,
}

impl<'a> RhsContext<'a> {
    fn new(net: &'a AssembledNetwork) -> Self {
        Self {
            net,
            syn_deriv: vec![[0.0; 5]; net.n_synapses()],
        }
    }

    /// Evaluate the full coupled RHS at (t, y) with the given flags.
    fn eval(&mut self, t: f64, y: &[f64], flags: &[u8], out: &mut [f64]) -> Result<()> {
        let net = self.net;
        // Synapses first: their output derivative feeds the neuron drive.
        for m in 0..net.n_synapses() {
            let o = net.synapse_offset(m);
            let s = SynapseState {
                i: [y[o], y[o + 1], y[o + 2], y[o + 3], y[o + 4]],
                h: flags[net.synapse_flag(m)],
            };
            let d = synapse_rhs(&s, &net.synapses[m].params)?;
            self.syn_deriv[m] = d;
            out[o..o + SYNAPSE_STATES].copy_from_slice(&d);
        }
        for k in 0..net.n_neurons() {
            let o = net.neuron_offset(k);
            let (f1, f2) = net.neuron_flag(k);
            let s = NeuronState {
                i: [y[o], y[o + 1], y[o + 2], y[o + 3]],
                n1: flags[f1],
                n2: flags[f2],
            };
            let drive = &net.neurons[k].drive;
            let mut i_in = drive.value(t);
            let mut di_in = drive.slope(t);
            for &m in &net.incoming[k] {
                let so = net.synapse_offset(m);
                i_in += y[so + 4];
                di_in += self.syn_deriv[m][4];
            }
            let d = neuron_rhs(&s, &net.neurons[k].params, i_in, di_in)?;
            out[o..o + NEURON_STATES].copy_from_slice(&d);
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Difference between the 5th- and 4th-order weights (error estimate).
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Minimum step before declaring the system unintegrable (ns).
const H_FLOOR: f64 = 1e-10;

struct Stepper<'a> {
    ctx: RhsContext<'a>,
    k: [Vec<f64>; 7],
    y_tmp: Vec<f64>,
    cfg: &'a IntegratorConfig,
}

impl<'a> Stepper<'a> {
    fn new(net: &'a AssembledNetwork, cfg: &'a IntegratorConfig) -> Self {
        let dim = net.state_dim();
        Self {
            ctx: RhsContext::new(net),
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_tmp: vec![0.0; dim],
            cfg,
        }
    }

    /// One embedded RK step of size `h` from `(t, y)`; writes the 5th-order
    /// solution into `y_out` and returns the scaled error norm.
    fn step(
        &mut self,
        t: f64,
        y: &[f64],
        flags: &[u8],
        h: f64,
        f0: &[f64],
        y_out: &mut [f64],
    ) -> Result<f64> {
        let dim = y.len();
        self.k[0].copy_from_slice(f0);
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, a) in A[stage].iter().enumerate().take(stage + 1) {
                    acc += a * self.k[j][i];
                }
                self.y_tmp[i] = y[i] + h * acc;
            }
            let t_stage = t + C[stage] * h;
            let (_, tail) = self.k.split_at_mut(stage + 1);
            self.ctx.eval(t_stage, &self.y_tmp, flags, &mut tail[0])?;
        }
        // 5th-order solution = stage-7 input (FSAL structure of the
        // tableau: row 6 of A equals the b weights).
        y_out.copy_from_slice(&self.y_tmp);
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, w) in E.iter().enumerate() {
                e += w * self.k[j][i];
            }
            e *= h;
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * y[i].abs().max(y_out[i].abs());
            let r = e / scale;
            err_sq += r * r;
        }
        Ok((err_sq / dim as f64).sqrt())
    }

    /// Integrate from `(t0, y0)` to exactly `t1` with fixed flags,
    /// adapting internally. Used by the event bisection.
    fn integrate_to(
        &mut self,
        t0: f64,
        y0: &[f64],
        flags: &[u8],
        t1: f64,
        h_hint: f64,
        y_out: &mut [f64],
    ) -> Result<()> {
        let dim = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut f0 = vec![0.0; dim];
        let mut y_new = vec![0.0; dim];
        let mut h = h_hint.min(t1 - t0).max(H_FLOOR);
        self.ctx.eval(t, &y, flags, &mut f0)?;
        while t < t1 {
            h = h.min(t1 - t);
            let err = self.step(t, &y, flags, h, &f0, &mut y_new)?;
            if err <= 1.0 || h <= H_FLOOR {
                t += h;
                std::mem::swap(&mut y, &mut y_new);
                if t < t1 {
                    self.ctx.eval(t, &y, flags, &mut f0)?;
                }
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (h * factor).min(self.cfg.dt_max);
            if h < H_FLOOR && t < t1 {
                return Err(Error::StepUnderflow { t_ns: t, h_ns: h });
            }
        }
        y_out.copy_from_slice(&y);
        Ok(())
    }
}

/// Crossing function for one element's switch: positive once the flag
/// should transition. For a superconducting element this is
/// `|i| − threshold_up`; for a resistive one it is `threshold_down − |i|`.
fn crossing(
    net: &AssembledNetwork,
    y: &[f64],
    flags: &[u8],
    which: usize,
) -> (ElementFlag, f64) {
    let n = net.n_neurons();
    if which < 2 * n {
        let k = which / 2;
        let o = net.neuron_offset(k);
        let p = &net.neurons[k].params;
        if which % 2 == 0 {
            let i = y[o].abs();
            let f = flags[which];
            let g = if f == 0 { i - p.nw1.i_c } else { p.nw1.i_r - i };
            (ElementFlag::NeuronControl(k), g)
        } else {
            let i = y[o + 2].abs();
            let f = flags[which];
            let g = if f == 0 { i - p.nw2.i_c } else { p.nw2.i_r - i };
            (ElementFlag::NeuronMain(k), g)
        }
    } else {
        let m = which - 2 * n;
        let o = net.synapse_offset(m);
        let p = &net.synapses[m].params;
        let src = net.synapse_source[m];
        let upstream = flags[net.neuron_flag(src).1];
        let i = y[o].abs();
        let f = flags[net.synapse_flag(m)];
        let g = if f == 0 {
            i - effective_htron_threshold(p, upstream).abs()
        } else if upstream == 1 {
            // Channel is held resistive while the upstream neuron fires.
            f64::NEG_INFINITY
        } else {
            p.channel.i_r - i
        };
        (ElementFlag::SynapseChannel(m), g)
    }
}

/// Apply every due flag transition at `(t, y)`, cascading the forced
/// `h = 1` coupling, in deterministic element-index order. Returns the
/// recorded events.
fn apply_transitions(
    net: &AssembledNetwork,
    t: f64,
    y: &[f64],
    flags: &mut [u8],
) -> Vec<SwitchEvent> {
    let mut events = Vec::new();
    // Iterate to a fixpoint: a neuron's n2 rising forces downstream
    // channels, possibly in the same instant.
    loop {
        let mut changed = false;
        for which in 0..net.flag_dim() {
            let (element, g) = crossing(net, y, flags, which);
            if g <= 0.0 {
                continue;
            }
            let flag_idx = match element {
                ElementFlag::NeuronControl(k) => net.neuron_flag(k).0,
                ElementFlag::NeuronMain(k) => net.neuron_flag(k).1,
                ElementFlag::SynapseChannel(m) => net.synapse_flag(m),
            };
            let rising = flags[flag_idx] == 0;
            flags[flag_idx] = if rising { 1 } else { 0 };
            events.push(SwitchEvent {
                t_ns: t,
                element,
                rising,
            });
            changed = true;
        }
        // Forced thermal coupling: h = 1 whenever the upstream n2 = 1.
        for m in 0..net.n_synapses() {
            let src_n2 = flags[net.neuron_flag(net.synapse_source[m]).1];
            let hf = net.synapse_flag(m);
            if src_n2 == 1 && flags[hf] == 0 {
                flags[hf] = 1;
                events.push(SwitchEvent {
                    t_ns: t,
                    element: ElementFlag::SynapseChannel(m),
                    rising: true,
                });
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    events
}

/// Tracks per-element event counts within a sliding window to detect
/// chattering.
struct ChatterGuard {
    times: Vec<Vec<f64>>,
    cap: usize,
    window: f64,
}

impl ChatterGuard {
    fn new(n_elements: usize, cap: usize, window: f64) -> Self {
        Self {
            times: vec![Vec::new(); n_elements],
            cap,
            window,
        }
    }

    fn record(
        &mut self,
        net: &AssembledNetwork,
        element: ElementFlag,
        idx: usize,
        t: f64,
    ) -> Result<()> {
        let list = &mut self.times[idx];
        list.push(t);
        let cutoff = t - self.window;
        list.retain(|&e| e >= cutoff);
        if list.len() > self.cap {
            return Err(Error::EventChatter {
                element: element.label(net),
                t_ns: t,
                count: list.len(),
                window_ns: self.window,
            });
        }
        Ok(())
    }
}

fn element_index(net: &AssembledNetwork, element: ElementFlag) -> usize {
    match element {
        ElementFlag::NeuronControl(k) => net.neuron_flag(k).0,
        ElementFlag::NeuronMain(k) => net.neuron_flag(k).1,
        ElementFlag::SynapseChannel(m) => net.synapse_flag(m),
    }
}

struct TraceBuilder {
    trace: SimulationTrace,
    next_sample: f64,
    sample_dt: f64,
}

impl TraceBuilder {
    fn new(net: &AssembledNetwork, cfg: &IntegratorConfig) -> Self {
        Self {
            trace: SimulationTrace {
                times: Vec::new(),
                states: Vec::new(),
                flags: Vec::new(),
                spike_events: vec![Vec::new(); net.n_neurons()],
                switch_events: Vec::new(),
                state_labels: net.state_labels(),
                flag_labels: net.flag_labels(),
                t_end: cfg.t_end,
            },
            next_sample: 0.0,
            sample_dt: cfg.sample_dt,
        }
    }

    fn record(&mut self, t: f64, y: &[f64], flags: &[u8]) {
        if let Some(&last) = self.trace.times.last() {
            if t <= last {
                return;
            }
        }
        self.trace.times.push(t);
        self.trace.states.push(y.to_vec());
        self.trace.flags.push(flags.to_vec());
    }

    /// Record interpolated rows for every grid point in `(t0, t1]`.
    fn record_grid(&mut self, t0: f64, y0: &[f64], t1: f64, y1: &[f64], flags: &[u8]) {
        while self.next_sample <= t1 {
            let ts = self.next_sample;
            if ts > t0 {
                let f = (ts - t0) / (t1 - t0);
                let row: Vec<f64> = y0
                    .iter()
                    .zip(y1.iter())
                    .map(|(a, b)| a + f * (b - a))
                    .collect();
                self.record(ts, &row, flags);
            }
            self.next_sample += self.sample_dt;
        }
    }
}

/// Simulate the assembled network under hybrid-system semantics.
pub fn simulate(net: &AssembledNetwork, cfg: &IntegratorConfig) -> Result<SimulationTrace> {
    cfg.validate()?;
    let dim = net.state_dim();
    if dim == 0 {
        let mut builder = TraceBuilder::new(net, cfg);
        builder.record(0.0, &[], &[]);
        builder.record(cfg.t_end, &[], &[]);
        return Ok(builder.trace);
    }
    let mut y = quiescent_state(net)?;
    let mut flags = vec![0u8; net.flag_dim()];
    let mut stepper = Stepper::new(net, cfg);
    let mut builder = TraceBuilder::new(net, cfg);
    let mut guard = ChatterGuard::new(net.flag_dim(), cfg.event_cap, cfg.chatter_window_ns);
    let mut rng = (cfg.noise_sigma > 0.0).then(|| ChaCha8Rng::seed_from_u64(cfg.seed));

    let mut t = 0.0;
    let mut h = cfg.dt_max.min(cfg.t_end) / 16.0;
    let mut f0 = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut bp_iter = net.breakpoints.iter().copied().peekable();

    builder.record(0.0, &y, &flags);
    builder.next_sample = cfg.sample_dt;

    // Resolve any transitions due in the initial state (e.g. a network
    // assembled with a supercritical drive at t = 0).
    for ev in apply_transitions(net, 0.0, &y, &mut flags) {
        builder.trace.switch_events.push(ev);
    }

    let check_finite = |y: &[f64], t: f64| -> Result<()> {
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Diverged { t_ns: t })
        }
    };

    while t < cfg.t_end {
        // Never step across a drive breakpoint: the RHS slope is
        // discontinuous there.
        while let Some(&bp) = bp_iter.peek() {
            if bp <= t + 1e-12 {
                bp_iter.next();
            } else {
                break;
            }
        }
        let mut h_step = h.min(cfg.dt_max).min(cfg.t_end - t);
        if let Some(&bp) = bp_iter.peek() {
            h_step = h_step.min(bp - t);
        }
        h_step = h_step.max(H_FLOOR);

        stepper.ctx.eval(t, &y, &flags, &mut f0).map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged { t_ns: t },
            other => other,
        })?;
        let err = stepper.step(t, &y, &flags, h_step, &f0, &mut y_new)?;
        if err > 1.0 && h_step > H_FLOOR {
            h = h_step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            if h < H_FLOOR {
                return Err(Error::StepUnderflow { t_ns: t, h_ns: h });
            }
            continue;
        }
        check_finite(&y_new, t)?;

        // Event scan over the step endpoints.
        let mut earliest: Option<usize> = None;
        for which in 0..net.flag_dim() {
            let (_, g1) = crossing(net, &y_new, &flags, which);
            if g1 > 0.0 {
                earliest = Some(which);
                break;
            }
        }

        if earliest.is_some() && h_step > cfg.dt_event {
            // Bisection: find the earliest instant in (t, t + h_step] at
            // which any crossing function turns positive.
            let mut lo = 0.0;
            let mut hi = h_step;
            let mut y_hi = y_new.clone();
            let mut y_lo = y.clone();
            while hi - lo > cfg.dt_event {
                let mid = 0.5 * (lo + hi);
                let mut y_mid = vec![0.0; dim];
                stepper.integrate_to(t + lo, &y_lo, &flags, t + mid, (mid - lo) / 4.0, &mut y_mid)?;
                let crossed = (0..net.flag_dim())
                    .any(|w| crossing(net, &y_mid, &flags, w).1 > 0.0);
                if crossed {
                    hi = mid;
                    y_hi = y_mid;
                } else {
                    lo = mid;
                    y_lo = y_mid;
                }
            }
            let t_ev = t + hi;
            y.copy_from_slice(&y_hi);
            t = t_ev;
            check_finite(&y, t)?;
            let events = apply_transitions(net, t_ev, &y, &mut flags);
            for ev in &events {
                guard.record(net, ev.element, element_index(net, ev.element), t_ev)?;
                if let ElementFlag::NeuronMain(k) = ev.element {
                    if ev.rising {
                        builder.trace.spike_events[k].push(t_ev);
                    }
                }
            }
            builder.record(t_ev, &y, &flags);
            builder.trace.switch_events.extend(events);
            h = (cfg.dt_event * 100.0).min(cfg.dt_max);
            continue;
        }

        // Accepted smooth step (any crossing within dt_event of the step
        // end is applied at the endpoint).
        builder.record_grid(t, &y, t + h_step, &y_new, &flags);
        t += h_step;
        std::mem::swap(&mut y, &mut y_new);
        if let Some(rng) = rng.as_mut() {
            apply_noise(net, &mut y, cfg.noise_sigma, rng);
        }
        let events = apply_transitions(net, t, &y, &mut flags);
        if !events.is_empty() {
            for ev in &events {
                guard.record(net, ev.element, element_index(net, ev.element), t)?;
                if let ElementFlag::NeuronMain(k) = ev.element {
                    if ev.rising {
                        builder.trace.spike_events[k].push(t);
                    }
                }
            }
            builder.record(t, &y, &flags);
            builder.trace.switch_events.extend(events);
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h_step * factor).min(cfg.dt_max);
    }

    builder.record(cfg.t_end, &y, &flags);
    Ok(builder.trace)
}

fn apply_noise(net: &AssembledNetwork, y: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    use rand::Rng;
    // Perturb every nanowire current (neuron oscillators and hTron
    // channels); Box-Muller via two uniforms keeps the dependency surface
    // small.
    let mut gauss = || {
        let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    for k in 0..net.n_neurons() {
        let o = net.neuron_offset(k);
        y[o] += sigma * gauss();
        y[o + 2] += sigma * gauss();
    }
    for m in 0..net.n_synapses() {
        let o = net.synapse_offset(m);
        y[o] += sigma * gauss();
    }
}

/// Forward-Euler reference integrator with per-step threshold checks.
///
/// Independent of the adaptive path: fixed step, no error control, no
/// event localisation beyond the step grid. Intended as a verification
/// oracle at very small `dt` (1 ps recommended).
pub fn simulate_fixed_step_oracle(
    net: &AssembledNetwork,
    dt: f64,
    t_end: f64,
) -> Result<SimulationTrace> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(Error::InvalidParameter(
            "oracle dt and t_end must be positive".into(),
        ));
    }
    let dim = net.state_dim();
    let mut y = quiescent_state(net)?;
    let mut flags = vec![0u8; net.flag_dim()];
    let mut ctx = RhsContext::new(net);
    let mut dydt = vec![0.0; dim];

    let sample_dt = (t_end / 2048.0).max(dt);
    let mut trace = SimulationTrace {
        times: vec![0.0],
        states: vec![y.clone()],
        flags: vec![flags.clone()],
        spike_events: vec![Vec::new(); net.n_neurons()],
        switch_events: Vec::new(),
        state_labels: net.state_labels(),
        flag_labels: net.flag_labels(),
        t_end,
    };
    let mut next_sample = sample_dt;

    let n_steps = (t_end / dt).ceil() as u64;
    for step in 0..n_steps {
        let t = step as f64 * dt;
        ctx.eval(t, &y, &flags, &mut dydt)
            .map_err(|_| Error::Diverged { t_ns: t })?;
        for i in 0..dim {
            y[i] += dt * dydt[i];
        }
        let t1 = t + dt;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Diverged { t_ns: t });
        }
        // Per-step threshold checks in element-index order.
        let events = apply_transitions(net, t1, &y, &mut flags);
        for ev in &events {
            if let ElementFlag::NeuronMain(k) = ev.element {
                if ev.rising {
                    trace.spike_events[k].push(t1);
                }
            }
        }
        if !events.is_empty() {
            trace.times.push(t1);
            trace.states.push(y.clone());
            trace.flags.push(flags.clone());
            trace.switch_events.extend(events);
        } else if t1 >= next_sample {
            trace.times.push(t1);
            trace.states.push(y.clone());
            trace.flags.push(flags.clone());
            while next_sample <= t1 {
                next_sample += sample_dt;
            }
        }
    }
    Ok(trace)
}

/// Spike-train update rule used by `apply_transitions`, re-exported for
/// tests that drive a synapse with a synthetic upstream train.
pub(crate) fn synapse_forced_update(
    params: &crate::circuit::SynapseParams,
    h: u8,
    channel_current: f64,
    upstream_firing: u8,
) -> u8 {
    if upstream_firing == 1 {
        return 1;
    }
    let thr = effective_htron_threshold(params, upstream_firing);
    let mut p = params.channel;
    p.i_c = thr.abs().max(f64::MIN_POSITIVE);
    update_switch(h, channel_current, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{NanowireParams, NeuronParams};
    use crate::graph::{assemble, InputDrive, NetworkGraph};

    fn neuron_params() -> NeuronParams {
        NeuronParams {
            nw1: NanowireParams::new(10.0, 30.0),
            nw2: NanowireParams::new(10.0, 30.0),
            l1: 20.0,
            l2: 20.0,
            r1: 5.0,
            r2: 5.0,
            i_bias: 57.0,
            eq5_literal: false,
        }
    }

    fn single_neuron(drive: InputDrive) -> AssembledNetwork {
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", neuron_params(), drive);
        assemble(&g).unwrap()
    }

    #[test]
    fn quiescent_network_stays_quiescent() {
        let net = single_neuron(InputDrive::zero());
        let cfg = IntegratorConfig::default().with_t_end(200.0);
        let trace = simulate(&net, &cfg).unwrap();
        assert!(trace.spike_events[0].is_empty());
        assert!(trace.switch_events.is_empty());
        let last = trace.states.last().unwrap();
        assert!((last[0] + 28.5).abs() < 1e-6);
        assert!((last[2] - 28.5).abs() < 1e-6);
    }

    #[test]
    fn driven_neuron_emits_periodic_spikes() {
        let net = single_neuron(InputDrive::LinearRamp {
            rate_ua_per_ns: 1.0,
            t_start_ns: 0.0,
            cap_ua: Some(22.0),
        });
        let cfg = IntegratorConfig::default().with_t_end(600.0);
        let trace = simulate(&net, &cfg).unwrap();
        let spikes = &trace.spike_events[0];
        assert!(
            spikes.len() >= 5,
            "expected a spike train, got {} spikes",
            spikes.len()
        );
        // Spike period: tens of ns, roughly constant late in the run.
        let isis: Vec<f64> = spikes.windows(2).map(|w| w[1] - w[0]).collect();
        let late = &isis[isis.len() / 2..];
        let mean = late.iter().sum::<f64>() / late.len() as f64;
        assert!(
            (5.0..200.0).contains(&mean),
            "spike period {mean} ns out of expected range"
        );
        for isi in late {
            assert!(
                (isi - mean).abs() < 0.2 * mean,
                "irregular late ISI {isi} vs mean {mean}"
            );
        }
    }

    #[test]
    fn deterministic_without_noise() {
        let net = single_neuron(InputDrive::ramp(0.5));
        let cfg = IntegratorConfig::default().with_t_end(300.0);
        let a = simulate(&net, &cfg).unwrap();
        let b = simulate(&net, &cfg).unwrap();
        assert_eq!(a.spike_events, b.spike_events);
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn noisy_runs_reproducible_with_seed() {
        let net = single_neuron(InputDrive::ramp(0.5));
        let mut cfg = IntegratorConfig::default().with_t_end(300.0);
        cfg.noise_sigma = 0.05;
        cfg.seed = 42;
        let a = simulate(&net, &cfg).unwrap();
        let b = simulate(&net, &cfg).unwrap();
        assert_eq!(a.spike_events, b.spike_events);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 43;
        let c = simulate(&net, &cfg2).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn oracle_matches_on_zero_input() {
        let net = single_neuron(InputDrive::zero());
        let cfg = IntegratorConfig::default().with_t_end(50.0);
        let a = simulate(&net, &cfg).unwrap();
        let b = simulate_fixed_step_oracle(&net, 1e-3, 50.0).unwrap();
        assert!(a.spike_events[0].is_empty() && b.spike_events[0].is_empty());
        let ya = a.states.last().unwrap();
        let yb = b.states.last().unwrap();
        for (u, v) in ya.iter().zip(yb.iter()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn spike_events_match_switch_events() {
        let net = single_neuron(InputDrive::ramp(1.0));
        let cfg = IntegratorConfig::default().with_t_end(200.0);
        let trace = simulate(&net, &cfg).unwrap();
        let rises: Vec<f64> = trace
            .switch_events
            .iter()
            .filter(|e| matches!(e.element, ElementFlag::NeuronMain(0)) && e.rising)
            .map(|e| e.t_ns)
            .collect();
        assert_eq!(rises, trace.spike_events[0]);
        // Times strictly increasing.
        for w in trace.times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}
