//! Network description and assembly.
//!
//! A [`NetworkGraph`] lists neurons (with their input drives) and directed
//! synapses; [`assemble`] flattens it into one coupled state system with
//! the electrical coupling (synapse output currents summing into the
//! target neuron's input node) and the thermal coupling (each synapse's
//! hTron slaved to its source neuron's main-oscillator flag).

use crate::circuit::{NeuronParams, SynapseParams};
use crate::error::{Error, Result};

/// Time-dependent input current drive at a neuron's input node.
///
/// Drives are piecewise smooth with analytically known slope; the
/// integrator never steps across a breakpoint, so the right-hand side only
/// ever sees a smooth drive.
#[derive(Debug, Clone, PartialEq)]
pub enum InputDrive {
    /// Constant current, ramped up linearly over `onset_ns` from t = 0 so
    /// the drive is continuous from the quiescent state.
    Constant { amplitude_ua: f64, onset_ns: f64 },
    /// Linear ramp `rate * (t - t_start)`, optionally capped in magnitude.
    LinearRamp {
        rate_ua_per_ns: f64,
        t_start_ns: f64,
        cap_ua: Option<f64>,
    },
    /// Trapezoidal pulses of the given amplitude: each pulse rises over
    /// `rise_ns`, holds for `width_ns`, and falls over `rise_ns`.
    PulseTrain {
        times_ns: Vec<f64>,
        width_ns: f64,
        amplitude_ua: f64,
        rise_ns: f64,
    },
    /// Piecewise-linear interpolation through `(t, value)` knots, holding
    /// the last value afterwards. Knots must be strictly time-ordered.
    Piecewise { knots: Vec<(f64, f64)> },
}

impl InputDrive {
    pub fn zero() -> Self {
        InputDrive::Constant {
            amplitude_ua: 0.0,
            onset_ns: 1.0,
        }
    }

    pub fn constant(amplitude_ua: f64) -> Self {
        InputDrive::Constant {
            amplitude_ua,
            onset_ns: 1.0,
        }
    }

    pub fn ramp(rate_ua_per_ns: f64) -> Self {
        InputDrive::LinearRamp {
            rate_ua_per_ns,
            t_start_ns: 0.0,
            cap_ua: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputDrive::Constant { onset_ns, .. } => {
                if !(*onset_ns > 0.0) {
                    return Err(Error::InvalidParameter(
                        "constant drive onset must be positive".into(),
                    ));
                }
            }
            InputDrive::LinearRamp { cap_ua, .. } => {
                if let Some(c) = cap_ua {
                    if !(*c > 0.0) {
                        return Err(Error::InvalidParameter(
                            "ramp cap must be positive".into(),
                        ));
                    }
                }
            }
            InputDrive::PulseTrain {
                times_ns,
                width_ns,
                rise_ns,
                ..
            } => {
                if !(*width_ns > 0.0 && *rise_ns > 0.0) {
                    return Err(Error::InvalidParameter(
                        "pulse width and rise time must be positive".into(),
                    ));
                }
                let period = width_ns + 2.0 * rise_ns;
                for w in times_ns.windows(2) {
                    if w[1] < w[0] + period {
                        return Err(Error::InvalidParameter(format!(
                            "pulses at {} and {} ns overlap",
                            w[0], w[1]
                        )));
                    }
                }
            }
            InputDrive::Piecewise { knots } => {
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidParameter(format!(
                            "piecewise knots must be strictly time-ordered ({} then {})",
                            w[0].0, w[1].0
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Drive value at time `t` (µA).
    pub fn value(&self, t: f64) -> f64 {
        match self {
            InputDrive::Constant {
                amplitude_ua,
                onset_ns,
            } => {
                if t <= 0.0 {
                    0.0
                } else if t < *onset_ns {
                    amplitude_ua * t / onset_ns
                } else {
                    *amplitude_ua
                }
            }
            InputDrive::LinearRamp {
                rate_ua_per_ns,
                t_start_ns,
                cap_ua,
            } => {
                let v = if t <= *t_start_ns {
                    0.0
                } else {
                    rate_ua_per_ns * (t - t_start_ns)
                };
                match cap_ua {
                    Some(c) => v.clamp(-c.abs(), c.abs()),
                    None => v,
                }
            }
            InputDrive::PulseTrain {
                times_ns,
                width_ns,
                amplitude_ua,
                rise_ns,
            } => {
                let mut v = 0.0;
                for &t0 in times_ns {
                    let x = t - t0;
                    if x <= 0.0 || x >= width_ns + 2.0 * rise_ns {
                        continue;
                    }
                    v += if x < *rise_ns {
                        amplitude_ua * x / rise_ns
                    } else if x < rise_ns + width_ns {
                        *amplitude_ua
                    } else {
                        amplitude_ua * (width_ns + 2.0 * rise_ns - x) / rise_ns
                    };
                }
                v
            }
            InputDrive::Piecewise { knots } => {
                // Hold the first value before the first knot and the last
                // value after the last knot; linear in between.
                if knots.is_empty() {
                    return 0.0;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                for w in knots.windows(2) {
                    if t <= w[1].0 {
                        let f = (t - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    /// Analytic time derivative of the drive (µA/ns).
    pub fn slope(&self, t: f64) -> f64 {
        match self {
            InputDrive::Constant {
                amplitude_ua,
                onset_ns,
            } => {
                if t > 0.0 && t < *onset_ns {
                    amplitude_ua / onset_ns
                } else {
                    0.0
                }
            }
            InputDrive::LinearRamp {
                rate_ua_per_ns,
                t_start_ns,
                cap_ua,
            } => {
                if t <= *t_start_ns {
                    return 0.0;
                }
                if let Some(c) = cap_ua {
                    let v = rate_ua_per_ns * (t - t_start_ns);
                    if v.abs() >= c.abs() {
                        return 0.0;
                    }
                }
                *rate_ua_per_ns
            }
            InputDrive::PulseTrain {
                times_ns,
                width_ns,
                amplitude_ua,
                rise_ns,
            } => {
                let mut s = 0.0;
                for &t0 in times_ns {
                    let x = t - t0;
                    if x <= 0.0 || x >= width_ns + 2.0 * rise_ns {
                        continue;
                    }
                    if x < *rise_ns {
                        s += amplitude_ua / rise_ns;
                    } else if x >= rise_ns + width_ns {
                        s -= amplitude_ua / rise_ns;
                    }
                }
                s
            }
            InputDrive::Piecewise { knots } => {
                if knots.len() < 2 || t <= knots[0].0 || t >= knots[knots.len() - 1].0 {
                    return 0.0;
                }
                for w in knots.windows(2) {
                    if t <= w[1].0 {
                        return (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                    }
                }
                0.0
            }
        }
    }

    /// Times at which the drive's slope is discontinuous; the integrator
    /// aligns step boundaries with these.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            InputDrive::Constant { onset_ns, .. } => vec![0.0, *onset_ns],
            InputDrive::LinearRamp {
                rate_ua_per_ns,
                t_start_ns,
                cap_ua,
            } => {
                let mut b = vec![*t_start_ns];
                if let Some(c) = cap_ua {
                    if *rate_ua_per_ns != 0.0 {
                        b.push(t_start_ns + (c / rate_ua_per_ns).abs());
                    }
                }
                b
            }
            InputDrive::PulseTrain {
                times_ns,
                width_ns,
                rise_ns,
                ..
            } => times_ns
                .iter()
                .flat_map(|&t0| {
                    [
                        t0,
                        t0 + rise_ns,
                        t0 + rise_ns + width_ns,
                        t0 + 2.0 * rise_ns + width_ns,
                    ]
                })
                .collect(),
            InputDrive::Piecewise { knots } => knots.iter().map(|k| k.0).collect(),
        }
    }
}

/// A neuron vertex: id, circuit parameters, and its external drive.
#[derive(Debug, Clone)]
pub struct NeuronSpec {
    pub id: String,
    pub params: NeuronParams,
    pub drive: InputDrive,
}

/// A directed synapse edge: thermal input from `source`, electrical output
/// into `target`. Self-loops (`source == target`) realize self-inhibition.
#[derive(Debug, Clone)]
pub struct SynapseSpec {
    pub source: String,
    pub target: String,
    pub params: SynapseParams,
}

/// Network of neurons and synapses, prior to assembly.
#[derive(Debug, Clone, Default)]
pub struct NetworkGraph {
    pub neurons: Vec<NeuronSpec>,
    pub synapses: Vec<SynapseSpec>,
}

impl NetworkGraph {
    pub fn add_neuron(&mut self, id: impl Into<String>, params: NeuronParams, drive: InputDrive) {
        self.neurons.push(NeuronSpec {
            id: id.into(),
            params,
            drive,
        });
    }

    pub fn add_synapse(
        &mut self,
        source: impl Into<String>,
        target: impl Into<String>,
        params: SynapseParams,
    ) {
        self.synapses.push(SynapseSpec {
            source: source.into(),
            target: target.into(),
            params,
        });
    }
}

/// Number of continuous states per neuron.
pub const NEURON_STATES: usize = 4;
/// Number of continuous states per synapse.
pub const SYNAPSE_STATES: usize = 5;

/// Flattened, validated network with a fixed state layout.
///
/// Continuous states: neuron `k` owns `[4k, 4k+4)`; synapse `m` owns
/// `[4 N + 5 m, 4 N + 5 m + 5)`. Flags: neuron `k` owns `n1 = 2k`,
/// `n2 = 2k + 1`; synapse `m` owns `2 N + m`.
#[derive(Debug, Clone)]
pub struct AssembledNetwork {
    pub neurons: Vec<NeuronSpec>,
    pub synapses: Vec<SynapseSpec>,
    /// Per synapse, the index of its source neuron.
    pub synapse_source: Vec<usize>,
    /// Per synapse, the index of its target neuron.
    pub synapse_target: Vec<usize>,
    /// Per neuron, the indices of synapses feeding its input node.
    pub incoming: Vec<Vec<usize>>,
    /// Union of all drive breakpoints, sorted and deduplicated.
    pub breakpoints: Vec<f64>,
}

impl AssembledNetwork {
    pub fn n_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn n_synapses(&self) -> usize {
        self.synapses.len()
    }

    /// Total continuous state dimension: `4 |neurons| + 5 |synapses|`.
    pub fn state_dim(&self) -> usize {
        NEURON_STATES * self.neurons.len() + SYNAPSE_STATES * self.synapses.len()
    }

    /// Total number of switch flags: `2 |neurons| + |synapses|`.
    pub fn flag_dim(&self) -> usize {
        2 * self.neurons.len() + self.synapses.len()
    }

    pub fn neuron_offset(&self, k: usize) -> usize {
        NEURON_STATES * k
    }

    pub fn synapse_offset(&self, m: usize) -> usize {
        NEURON_STATES * self.neurons.len() + SYNAPSE_STATES * m
    }

    pub fn neuron_flag(&self, k: usize) -> (usize, usize) {
        (2 * k, 2 * k + 1)
    }

    pub fn synapse_flag(&self, m: usize) -> usize {
        2 * self.neurons.len() + m
    }

    /// Column labels for the flattened state vector, in layout order.
    pub fn state_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.state_dim());
        for n in &self.neurons {
            for v in ["i1", "i2", "i3", "i4"] {
                labels.push(format!("{}_{}_uA", n.id, v));
            }
        }
        for (m, s) in self.synapses.iter().enumerate() {
            for v in ["i1", "i2", "i3", "i4", "i5"] {
                labels.push(format!("syn{}_{}_{}_{}_uA", m, s.source, s.target, v));
            }
        }
        labels
    }

    /// Labels for the flag vector, in layout order.
    pub fn flag_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.flag_dim());
        for n in &self.neurons {
            labels.push(format!("{}_n1", n.id));
            labels.push(format!("{}_n2", n.id));
        }
        for (m, s) in self.synapses.iter().enumerate() {
            labels.push(format!("syn{}_{}_{}_h", m, s.source, s.target));
        }
        labels
    }
}

/// Validate and flatten a network graph.
pub fn assemble(g: &NetworkGraph) -> Result<AssembledNetwork> {
    let mut offenders = Vec::new();
    for (k, n) in g.neurons.iter().enumerate() {
        if g.neurons[..k].iter().any(|m| m.id == n.id) {
            offenders.push(format!("duplicate neuron id '{}'", n.id));
        }
    }
    let index_of = |id: &str| g.neurons.iter().position(|n| n.id == id);
    let mut synapse_source = Vec::with_capacity(g.synapses.len());
    let mut synapse_target = Vec::with_capacity(g.synapses.len());
    for (m, s) in g.synapses.iter().enumerate() {
        match index_of(&s.source) {
            Some(k) => synapse_source.push(k),
            None => offenders.push(format!(
                "synapse {} references unknown source '{}'",
                m, s.source
            )),
        }
        match index_of(&s.target) {
            Some(k) => synapse_target.push(k),
            None => offenders.push(format!(
                "synapse {} references unknown target '{}'",
                m, s.target
            )),
        }
    }
    if !offenders.is_empty() {
        return Err(Error::InvalidNetwork(offenders.join("; ")));
    }
    for n in &g.neurons {
        n.params.validate()?;
        n.drive.validate()?;
    }
    for s in &g.synapses {
        s.params.validate()?;
    }

    let mut incoming = vec![Vec::new(); g.neurons.len()];
    for (m, &tgt) in synapse_target.iter().enumerate() {
        incoming[tgt].push(m);
    }

    let mut breakpoints: Vec<f64> = g
        .neurons
        .iter()
        .flat_map(|n| n.drive.breakpoints())
        .filter(|t| t.is_finite() && *t > 0.0)
        .collect();
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    Ok(AssembledNetwork {
        neurons: g.neurons.clone(),
        synapses: g.synapses.clone(),
        synapse_source,
        synapse_target,
        incoming,
        breakpoints,
    })
}

/// DC quiescent state: the bias splits symmetrically around the neuron
/// loop, `i1 = −i_bias/2` in the control nanowire and `i3 = +i_bias/2` in
/// the main nanowire (opposite loop orientations); each synapse's channel
/// carries its full bias; all flags are 0.
pub fn quiescent_state(net: &AssembledNetwork) -> Result<Vec<f64>> {
    let mut y = vec![0.0; net.state_dim()];
    for (k, n) in net.neurons.iter().enumerate() {
        let i_q = n.params.i_bias / 2.0;
        if i_q.abs() >= n.params.nw1.i_c || i_q.abs() >= n.params.nw2.i_c {
            return Err(Error::InvalidNetwork(format!(
                "neuron '{}' quiescent current {} µA is not subcritical (I_c = {}, {})",
                n.id, i_q, n.params.nw1.i_c, n.params.nw2.i_c
            )));
        }
        let o = net.neuron_offset(k);
        y[o] = -i_q;
        y[o + 2] = i_q;
    }
    for (m, s) in net.synapses.iter().enumerate() {
        if s.params.i_bias_h.abs() >= s.params.channel.i_c {
            return Err(Error::InvalidNetwork(format!(
                "synapse {} quiescent channel current {} µA is not subcritical (I_c,h = {})",
                m, s.params.i_bias_h, s.params.channel.i_c
            )));
        }
        y[net.synapse_offset(m)] = s.params.i_bias_h;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{NanowireParams, NeuronParams, SynapseParams};
    use approx::assert_relative_eq;

    fn neuron_params(i_bias: f64) -> NeuronParams {
        NeuronParams {
            nw1: NanowireParams::new(10.0, 30.0),
            nw2: NanowireParams::new(10.0, 30.0),
            l1: 20.0,
            l2: 20.0,
            r1: 5.0,
            r2: 5.0,
            i_bias,
            eq5_literal: false,
        }
    }

    fn synapse_params(i_bias_h: f64) -> SynapseParams {
        SynapseParams {
            channel: NanowireParams::new(100.0, 30.0),
            l_syn: 1000.0,
            r_syn1: 10.0,
            r_syn2: 10.0,
            r_out: 5.0,
            l_out: 20.0,
            i_bias_h,
            beta: 0.5,
        }
    }

    #[test]
    fn single_neuron_counts() {
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", neuron_params(40.0), InputDrive::zero());
        let net = assemble(&g).unwrap();
        assert_eq!(net.state_dim(), 4);
        assert_eq!(net.flag_dim(), 2);
    }

    #[test]
    fn fan_out_network_counts() {
        // One source feeding two targets through two synapses: 22 states.
        let mut g = NetworkGraph::default();
        for id in ["a", "b", "c"] {
            g.add_neuron(id, neuron_params(40.0), InputDrive::zero());
        }
        g.add_synapse("a", "b", synapse_params(10.0));
        g.add_synapse("a", "c", synapse_params(-10.0));
        let net = assemble(&g).unwrap();
        assert_eq!(net.state_dim(), 22);
        assert_eq!(net.incoming[1], vec![0]);
        assert_eq!(net.incoming[2], vec![1]);
    }

    #[test]
    fn self_loop_network_counts() {
        // Two neurons, four synapses including self-loops: 28 states.
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", neuron_params(40.0), InputDrive::zero());
        g.add_neuron("n2", neuron_params(40.0), InputDrive::zero());
        g.add_synapse("n1", "n1", synapse_params(-10.0));
        g.add_synapse("n1", "n2", synapse_params(10.0));
        g.add_synapse("n2", "n2", synapse_params(-10.0));
        g.add_synapse("n2", "n1", synapse_params(10.0));
        let net = assemble(&g).unwrap();
        assert_eq!(net.state_dim(), 28);
        assert_eq!(net.flag_dim(), 8);
    }

    #[test]
    fn dangling_edge_and_duplicate_id_are_reported() {
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", neuron_params(40.0), InputDrive::zero());
        g.add_neuron("n1", neuron_params(40.0), InputDrive::zero());
        g.add_synapse("n1", "ghost", synapse_params(10.0));
        let err = assemble(&g).unwrap_err().to_string();
        assert!(err.contains("duplicate neuron id 'n1'"));
        assert!(err.contains("unknown target 'ghost'"));
    }

    #[test]
    fn quiescent_state_divider_solution() {
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", neuron_params(40.0), InputDrive::zero());
        g.add_synapse("n1", "n1", synapse_params(27.0));
        let net = assemble(&g).unwrap();
        let y = quiescent_state(&net).unwrap();
        assert_relative_eq!(y[0], -20.0);
        assert_eq!(y[1], 0.0);
        assert_relative_eq!(y[2], 20.0);
        assert_eq!(y[3], 0.0);
        assert_relative_eq!(y[4], 27.0);
        assert_eq!(&y[5..9], &[0.0; 4]);
    }

    #[test]
    fn quiescent_zero_bias_is_all_zero() {
        let mut p = neuron_params(0.0);
        p.i_bias = 0.0;
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", p, InputDrive::zero());
        let net = assemble(&g).unwrap();
        assert!(quiescent_state(&net).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quiescent_supercritical_bias_is_rejected() {
        // Bypass parameter validation to exercise the quiescent check.
        let mut g = NetworkGraph::default();
        g.add_neuron("n1", neuron_params(59.0), InputDrive::zero());
        let mut net = assemble(&g).unwrap();
        net.neurons[0].params.i_bias = 61.0;
        assert!(quiescent_state(&net).is_err());
    }

    #[test]
    fn drive_values_and_slopes() {
        let c = InputDrive::constant(10.0);
        assert_eq!(c.value(-1.0), 0.0);
        assert_relative_eq!(c.value(0.5), 5.0);
        assert_relative_eq!(c.value(2.0), 10.0);
        assert_relative_eq!(c.slope(0.5), 10.0);
        assert_eq!(c.slope(2.0), 0.0);

        let r = InputDrive::LinearRamp {
            rate_ua_per_ns: 2.0,
            t_start_ns: 1.0,
            cap_ua: Some(4.0),
        };
        assert_eq!(r.value(0.5), 0.0);
        assert_relative_eq!(r.value(2.0), 2.0);
        assert_relative_eq!(r.value(10.0), 4.0);
        assert_eq!(r.slope(10.0), 0.0);
        assert_relative_eq!(r.slope(1.5), 2.0);

        let p = InputDrive::PulseTrain {
            times_ns: vec![10.0],
            width_ns: 4.0,
            amplitude_ua: 8.0,
            rise_ns: 1.0,
        };
        assert_eq!(p.value(9.0), 0.0);
        assert_relative_eq!(p.value(10.5), 4.0);
        assert_relative_eq!(p.value(12.0), 8.0);
        assert_relative_eq!(p.value(15.5), 4.0);
        assert_eq!(p.value(16.5), 0.0);

        let pw = InputDrive::Piecewise {
            knots: vec![(0.0, 0.0), (10.0, 5.0), (20.0, 5.0)],
        };
        assert_relative_eq!(pw.value(5.0), 2.5);
        assert_relative_eq!(pw.value(30.0), 5.0);
        assert_relative_eq!(pw.slope(5.0), 0.5);
        assert_eq!(pw.slope(15.0), 0.0);
    }

    #[test]
    fn overlapping_pulses_rejected() {
        let p = InputDrive::PulseTrain {
            times_ns: vec![10.0, 12.0],
            width_ns: 4.0,
            amplitude_ua: 8.0,
            rise_ns: 1.0,
        };
        assert!(p.validate().is_err());
    }
}
