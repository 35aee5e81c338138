//! Compilation from algorithmic neuron models to circuit parameters.
//!
//! Two source models are supported: the leaky integrate-and-fire model
//! (weight matrix, leakiness, transfer parameter, threshold) and a
//! discrete compositional model (per-node bias, edge weights, sigmoidal
//! firing rule). Both translate onto the same hardware vocabulary:
//! neuron bias currents, synapse bias currents, and the integration-loop
//! inductance that realizes the leak time constant.

use crate::circuit::{kinetic_inductance, NanowireParams, NeuronParams, SynapseParams};
use crate::error::{Error, Result};
use crate::graph::{InputDrive, NetworkGraph};

/// Default circuit element values applied wherever a model does not pin a
/// parameter. All overridable per element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareDefaults {
    /// Neuron nanowire zero-current inductance (nH).
    pub neuron_l_nw: f64,
    /// Neuron branch inductances (nH).
    pub neuron_l1: f64,
    pub neuron_l2: f64,
    /// Neuron shunt resistances (Ω).
    pub neuron_r1: f64,
    pub neuron_r2: f64,
    /// Neuron nanowire critical current (µA).
    pub neuron_i_c: f64,
    /// hTron channel inductance (nH).
    pub synapse_l_nw_h: f64,
    /// Synapse loop and output resistances (Ω).
    pub synapse_r_syn1: f64,
    pub synapse_r_syn2: f64,
    pub synapse_r_out: f64,
    /// Synapse output inductance (nH); the output branch reuses the
    /// neuron's L2 value.
    pub synapse_l_out: f64,
    /// Retrapping current as a fraction of the critical current.
    pub i_r_fraction: f64,
    /// Hotspot resistance of switched nanowires and channels (Ω).
    pub r_hs: f64,
    /// hTron suppression factor.
    pub beta: f64,
    /// Margin factor for emitted channel critical currents:
    /// `I_c,h = htron_margin · |I_bias_h|`.
    pub htron_margin: f64,
    /// Cap on emitted channel critical currents (µA); a weight demanding
    /// more is a realizability error.
    pub max_i_c_h: f64,
}

impl Default for HardwareDefaults {
    fn default() -> Self {
        Self {
            neuron_l_nw: 10.0,
            neuron_l1: 20.0,
            neuron_l2: 20.0,
            neuron_r1: 5.0,
            neuron_r2: 5.0,
            neuron_i_c: 30.0,
            synapse_l_nw_h: 100.0,
            synapse_r_syn1: 10.0,
            synapse_r_syn2: 10.0,
            synapse_r_out: 5.0,
            synapse_l_out: 20.0,
            i_r_fraction: 0.5,
            r_hs: 100.0,
            beta: 0.5,
            htron_margin: 1.1,
            max_i_c_h: 1000.0,
        }
    }
}

impl HardwareDefaults {
    pub fn neuron_params(&self, i_bias: f64) -> NeuronParams {
        let nw = NanowireParams {
            l0: self.neuron_l_nw,
            i_c: self.neuron_i_c,
            i_r: self.i_r_fraction * self.neuron_i_c,
            r_hs: self.r_hs,
        };
        NeuronParams {
            nw1: nw,
            nw2: nw,
            l1: self.neuron_l1,
            l2: self.neuron_l2,
            r1: self.neuron_r1,
            r2: self.neuron_r2,
            i_bias,
            eq5_literal: false,
        }
    }

    pub fn synapse_params(&self, i_bias_h: f64, l_syn: f64, i_c_h: f64) -> SynapseParams {
        SynapseParams {
            channel: NanowireParams {
                l0: self.synapse_l_nw_h,
                i_c: i_c_h,
                i_r: self.i_r_fraction * i_c_h,
                r_hs: self.r_hs,
            },
            l_syn,
            r_syn1: self.synapse_r_syn1,
            r_syn2: self.synapse_r_syn2,
            r_out: self.synapse_r_out,
            l_out: self.synapse_l_out,
            i_bias_h,
            beta: self.beta,
        }
    }

    /// Fraction of the synapse bias that appears as steady output current
    /// with the channel fully diverted: the DC solution of the loop
    /// resistor network.
    pub fn output_fraction(&self) -> f64 {
        let r2_over_r1 = self.synapse_r_syn2 / self.synapse_r_syn1;
        let r2_over_ro = self.synapse_r_syn2 / self.synapse_r_out;
        r2_over_ro / (1.0 + r2_over_r1 + r2_over_ro)
    }
}

/// Leaky integrate-and-fire network specification.
///
/// `c[i][j]` is the synaptic weight from neuron `j` into neuron `i`
/// (positive = inhibitory, matching the sign convention in which the
/// weighted spike sum is subtracted from the potential).
#[derive(Debug, Clone)]
pub struct LifSpec {
    pub c: Vec<Vec<f64>>,
    /// Per-neuron external input drive (µA at the input node).
    pub drives: Vec<InputDrive>,
    /// Leakiness: ratio of the neuron relaxation time constant to the
    /// synapse integration time constant.
    pub lambda: f64,
    /// Transfer parameter scaling synaptic weight into injected current.
    pub alpha: f64,
    /// Initial potential as a fraction of the threshold `eta`.
    pub u0: f64,
    /// Threshold potential (dimensionless; maps onto the critical
    /// current).
    pub eta: f64,
    /// Proportionality constant applied to all external drives.
    pub input_scale: f64,
}

impl LifSpec {
    pub fn new(c: Vec<Vec<f64>>, drives: Vec<InputDrive>) -> Self {
        Self {
            c,
            drives,
            lambda: 0.02,
            alpha: 0.67,
            u0: 0.95,
            eta: 1.0,
            input_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.c.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter(
                "LIF weight matrix must be square".into(),
            ));
        }
        if self.drives.len() != n {
            return Err(Error::InvalidParameter(format!(
                "LIF drives ({}) must match matrix dimension ({})",
                self.drives.len(),
                n
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "leakiness must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.eta > 0.0) || !(0.0..1.0).contains(&(self.u0 / self.eta)) {
            return Err(Error::InvalidParameter(format!(
                "initial potential must satisfy 0 <= u0 < eta, got u0 = {}, eta = {}",
                self.u0, self.eta
            )));
        }
        Ok(())
    }
}

/// Integration-loop inductance realizing the leakiness
/// `lambda = (L_nw / R2) / (L_syn / R_syn1)`.
pub fn l_syn_for_lambda(lambda: f64, hw: &HardwareDefaults) -> f64 {
    (hw.neuron_l_nw / hw.neuron_r2) * hw.synapse_r_syn1 / lambda
}

/// Recover the leakiness from emitted hardware parameters (the inverse of
/// [`l_syn_for_lambda`]); exact round trip by construction.
pub fn lambda_from_hardware(l_syn: f64, hw: &HardwareDefaults) -> f64 {
    (hw.neuron_l_nw / hw.neuron_r2) * hw.synapse_r_syn1 / l_syn
}

/// Quasi-static divider gain at the main nanowire for a small input
/// increment, evaluated at operating point `(|i1|, i3)`.
fn divider_gain(p: &NeuronParams, i1_abs: f64, i3: f64) -> f64 {
    let l_loop = p.l1 + p.l2 + kinetic_inductance(i1_abs, &p.nw1);
    l_loop / (l_loop + kinetic_inductance(i3, &p.nw2))
}

/// Quasi-static input current needed to drive the main nanowire from its
/// quiescent bias point to the critical current: the firing threshold of
/// an isolated neuron under a slow drive.
///
/// Integrates the inductive-divider pair `di3/dI = g(i1, i3)`,
/// `d|i1|/dI = 1 − g` from `i3 = I_bias/2` up to `I_c`.
pub fn quasi_static_threshold(p: &NeuronParams) -> f64 {
    let i_c = p.nw2.i_c;
    let mut i3 = p.i_bias / 2.0;
    let mut i1 = p.i_bias.abs() / 2.0;
    let mut drive = 0.0;
    let steps = 4000;
    let d_i3 = (i_c - i3) / steps as f64;
    if d_i3 <= 0.0 {
        return 0.0;
    }
    for _ in 0..steps {
        let g = divider_gain(p, i1, i3 + 0.5 * d_i3);
        drive += d_i3 / g;
        i1 += d_i3 * (1.0 - g) / g;
        i3 += d_i3;
    }
    drive
}

/// Compile a LIF specification into a network graph.
///
/// One neuron per matrix row; one synapse per nonzero weight, inhibitory
/// (negative bias) for positive weights and excitatory for negative ones.
/// The synapse bias is scaled so the fully charged output injects
/// `alpha * |C_ij| * (1 − u0/eta) * I_c` into the target's main
/// oscillator, a uniform ratio across all synapses.
pub fn from_lif(spec: &LifSpec, hw: &HardwareDefaults) -> Result<NetworkGraph> {
    spec.validate()?;
    let n = spec.c.len();
    let u0_frac = spec.u0 / spec.eta;
    let i_bias = 2.0 * u0_frac * hw.neuron_i_c;
    let headroom = (1.0 - u0_frac) * hw.neuron_i_c;
    let l_syn = l_syn_for_lambda(spec.lambda, hw);

    let mut g = NetworkGraph::default();
    for (k, drive) in spec.drives.iter().enumerate() {
        g.add_neuron(
            format!("n{}", k + 1),
            hw.neuron_params(i_bias),
            drive.scaled(spec.input_scale),
        );
    }

    // Transfer from synapse bias to main-oscillator current at full
    // charge: steady output fraction into the divider gain at the target's
    // quiescent point.
    let probe = hw.neuron_params(i_bias);
    let gain = divider_gain(&probe, i_bias / 2.0, i_bias / 2.0);
    let transfer = hw.output_fraction() * gain;

    for (i, row) in spec.c.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let magnitude = spec.alpha * w.abs() * headroom / transfer;
            let i_c_h = hw.htron_margin * magnitude;
            if i_c_h > hw.max_i_c_h {
                return Err(Error::Unrealizable(format!(
                    "weight C[{i}][{j}] = {w} demands channel critical current {i_c_h:.1} µA \
                     above the {} µA limit",
                    hw.max_i_c_h
                )));
            }
            let i_bias_h = -w.signum() * magnitude;
            // Edge direction: c[i][j] couples neuron j's spikes into
            // neuron i.
            g.add_synapse(
                format!("n{}", j + 1),
                format!("n{}", i + 1),
                hw.synapse_params(i_bias_h, l_syn, i_c_h),
            );
        }
    }
    Ok(g)
}

impl InputDrive {
    /// Multiply the drive's amplitude by a constant factor.
    pub fn scaled(&self, factor: f64) -> InputDrive {
        if factor == 1.0 {
            return self.clone();
        }
        match self {
            InputDrive::Constant {
                amplitude_ua,
                onset_ns,
            } => InputDrive::Constant {
                amplitude_ua: amplitude_ua * factor,
                onset_ns: *onset_ns,
            },
            InputDrive::LinearRamp {
                rate_ua_per_ns,
                t_start_ns,
                cap_ua,
            } => InputDrive::LinearRamp {
                rate_ua_per_ns: rate_ua_per_ns * factor,
                t_start_ns: *t_start_ns,
                cap_ua: cap_ua.map(|c| c * factor.abs()),
            },
            InputDrive::PulseTrain {
                times_ns,
                width_ns,
                amplitude_ua,
                rise_ns,
            } => InputDrive::PulseTrain {
                times_ns: times_ns.clone(),
                width_ns: *width_ns,
                amplitude_ua: amplitude_ua * factor,
                rise_ns: *rise_ns,
            },
            InputDrive::Piecewise { knots } => InputDrive::Piecewise {
                knots: knots.iter().map(|(t, v)| (*t, v * factor)).collect(),
            },
        }
    }
}

/// Compositional-model network: named nodes with bias values and directed
/// weighted edges, plus a temperature for the sigmoidal firing rule.
#[derive(Debug, Clone)]
pub struct CompositionalSpec {
    /// Node names with their bias `b(u)`, in units of the edge-weight
    /// scale (a bias of 2.5 means 2.5 unit weights are needed to fire).
    pub nodes: Vec<(String, f64)>,
    /// Directed edges `(source, target, w)` in unit weights.
    pub edges: Vec<(String, String, f64)>,
    /// Temperature of the probabilistic firing rule.
    pub temperature: f64,
}

impl CompositionalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidParameter(
                "compositional temperature must be positive".into(),
            ));
        }
        for (s, t, _) in &self.edges {
            for id in [s, t] {
                if !self.nodes.iter().any(|(n, _)| n == id) {
                    return Err(Error::InvalidParameter(format!(
                        "edge references undeclared node '{id}'"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Hardware anchor points for the compositional mapping: the biasing
/// values of the reference three-input gates.
pub mod gate_hardware {
    /// Critical current of gate-network neuron nanowires (µA).
    pub const I_C: f64 = 30.0;
    /// Bias of input-layer neurons (µA).
    pub const INPUT_BIAS: f64 = 58.0;
    /// Output-neuron bias of the reference 3-input coincidence (AND) gate
    /// (µA).
    pub const AND3_OUTPUT_BIAS: f64 = 54.6;
    /// Output-neuron bias of the reference 3-input OR gate (µA); does not
    /// change with fan-in.
    pub const OR_OUTPUT_BIAS: f64 = 57.0;
    /// Synapse bias per unit edge weight (µA).
    pub const SYNAPSE_BIAS: f64 = 27.0;
    /// External drive above which an input neuron fires (µA).
    pub const INPUT_THRESHOLD: f64 = 3.72;
}

/// Map a compositional temperature to a current-noise amplitude.
///
/// Deliberately a stub: the quantitative link between temperature and
/// physical current noise is not modelled, so the deterministic limit
/// (zero noise) is returned. Set `IntegratorConfig::noise_sigma` directly
/// to explore stochastic switching.
pub fn temperature_to_noise_sigma(_temperature: f64) -> f64 {
    0.0
}

/// Translate a compositional specification into a network graph.
///
/// Edge weights map to synapse bias at [`gate_hardware::SYNAPSE_BIAS`] per
/// unit weight. Node biases map to operating points on the firing
/// threshold map: input nodes (no incoming edges) sit at
/// [`gate_hardware::INPUT_BIAS`]; interior nodes are biased so that their
/// quasi-static synaptic firing threshold corresponds to `b(u)` unit
/// weights, anchored to the reference gate biases.
pub fn from_compositional(spec: &CompositionalSpec, hw: &HardwareDefaults) -> Result<NetworkGraph> {
    spec.validate()?;
    let mut g = NetworkGraph::default();
    let mut gate_hw = *hw;
    gate_hw.neuron_i_c = gate_hardware::I_C;
    for (name, b) in &spec.nodes {
        let has_incoming = spec.edges.iter().any(|(_, t, _)| t == name);
        let i_bias = if !has_incoming {
            gate_hardware::INPUT_BIAS
        } else {
            output_bias_for_threshold(*b, &gate_hw)?
        };
        g.add_neuron(name.clone(), gate_hw.neuron_params(i_bias), InputDrive::zero());
    }
    for (src, tgt, w) in &spec.edges {
        let i_bias_h = w * gate_hardware::SYNAPSE_BIAS;
        let i_c_h = gate_hw.htron_margin * i_bias_h.abs().max(1.0);
        g.add_synapse(
            src.clone(),
            tgt.clone(),
            gate_synapse_params(&gate_hw, i_bias_h, i_c_h),
        );
    }
    Ok(g)
}

/// Synapse parameters used in compositional/gate networks. The loop
/// inductance is chosen for fast integration on the gate timescale.
pub fn gate_synapse_params(hw: &HardwareDefaults, i_bias_h: f64, i_c_h: f64) -> SynapseParams {
    hw.synapse_params(i_bias_h, 1000.0, i_c_h)
}

/// Invert the firing-threshold map: the output-neuron bias at which the
/// quasi-static synaptic threshold equals `k` unit weights, anchored so
/// the reference coincidence gate (threshold 2.5) lands exactly on
/// [`gate_hardware::AND3_OUTPUT_BIAS`] and thresholds at or below 0.5 land
/// on [`gate_hardware::OR_OUTPUT_BIAS`].
pub fn output_bias_for_threshold(k: f64, hw: &HardwareDefaults) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold count must be positive, got {k}"
        )));
    }
    if k <= 0.5 {
        return Ok(gate_hardware::OR_OUTPUT_BIAS);
    }
    // Per-unit-weight synaptic drive implied by the reference anchor.
    let anchor = hw.neuron_params(gate_hardware::AND3_OUTPUT_BIAS);
    let unit_drive = quasi_static_threshold(&anchor) / 2.5;
    let target = k * unit_drive;
    bias_for_threshold_drive(target, hw)
}

/// Bias current at which the quasi-static firing threshold equals the
/// given input drive (µA). Bisection on the monotone bias → threshold map.
pub fn bias_for_threshold_drive(target_drive: f64, hw: &HardwareDefaults) -> Result<f64> {
    let mut lo = hw.neuron_i_c; // quiescent at I_c/2: largest threshold
    let mut hi = 2.0 * 0.999 * hw.neuron_i_c;
    let f = |bias: f64| quasi_static_threshold(&hw.neuron_params(bias));
    if target_drive > f(lo) {
        return Err(Error::Unrealizable(format!(
            "threshold drive {target_drive} µA exceeds the range reachable by biasing"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target_drive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Firing probability of an `n_inputs`-way coincidence node with
/// `n_firing` active inputs, edge weight `l_weight`, and bias `b`:
/// `(1 + exp(b − n_firing · l_weight))⁻¹`.
pub fn gate_probability(n_firing: usize, l_weight: f64, b: f64, n_inputs: usize) -> Result<f64> {
    if n_firing > n_inputs {
        return Err(Error::InvalidParameter(format!(
            "{n_firing} firing inputs exceed the {n_inputs} inputs"
        )));
    }
    Ok(1.0 / (1.0 + (b - n_firing as f64 * l_weight).exp()))
}

/// Fabrication limits used by the realizability report.
#[derive(Debug, Clone, Copy)]
pub struct RealizabilityLimits {
    /// Sheet kinetic inductance of the wiring material (pH per square).
    pub sheet_inductance_ph_sq: f64,
    /// Area bound expressed as a maximum number of squares per inductor.
    pub max_squares: f64,
    /// Maximum critical current (µA).
    pub max_critical_current_ua: f64,
    /// Minimum realizable resistance (Ω).
    pub min_resistance_ohm: f64,
}

impl RealizabilityLimits {
    /// NbN wiring, ~33 pH/sq.
    pub fn nbn() -> Self {
        Self {
            sheet_inductance_ph_sq: 33.0,
            max_squares: 1e5,
            max_critical_current_ua: 1000.0,
            min_resistance_ohm: 0.1,
        }
    }

    /// WSi wiring, ~260 pH/sq.
    pub fn wsi() -> Self {
        Self {
            sheet_inductance_ph_sq: 260.0,
            ..Self::nbn()
        }
    }
}

/// One realizability finding: the element, the limit it violates, and the
/// margin by which it does.
#[derive(Debug, Clone)]
pub struct Violation {
    pub element: String,
    pub limit: String,
    pub margin: f64,
}

/// Report of the realizability check: per-synapse area estimates plus any
/// limit violations. Report-only; nothing here blocks simulation.
#[derive(Debug, Clone, Default)]
pub struct RealizabilityReport {
    /// `(element, squares)` area estimate for each integration-loop
    /// inductor.
    pub inductor_squares: Vec<(String, f64)>,
    pub violations: Vec<Violation>,
}

impl RealizabilityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a network against fabrication limits: inductor area (squares =
/// L / sheet inductance), synapse bias vs channel critical current, and
/// minimum resistances.
pub fn check_realizability(g: &NetworkGraph, limits: &RealizabilityLimits) -> RealizabilityReport {
    let mut report = RealizabilityReport::default();
    // pH per square against nH inductances: 1 nH = 1000 pH.
    let sheet_nh = limits.sheet_inductance_ph_sq / 1000.0;
    for (m, s) in g.synapses.iter().enumerate() {
        let element = format!("synapse {} ({}->{})", m, s.source, s.target);
        let squares = s.params.l_syn / sheet_nh;
        report.inductor_squares.push((element.clone(), squares));
        if squares > limits.max_squares {
            report.violations.push(Violation {
                element: element.clone(),
                limit: format!("area <= {} squares", limits.max_squares),
                margin: squares / limits.max_squares,
            });
        }
        if s.params.i_bias_h.abs() >= s.params.channel.i_c {
            report.violations.push(Violation {
                element: element.clone(),
                limit: "bias below channel critical current".into(),
                margin: s.params.i_bias_h.abs() / s.params.channel.i_c,
            });
        }
        if s.params.channel.i_c > limits.max_critical_current_ua {
            report.violations.push(Violation {
                element: element.clone(),
                limit: format!("I_c,h <= {} µA", limits.max_critical_current_ua),
                margin: s.params.channel.i_c / limits.max_critical_current_ua,
            });
        }
        for (name, r) in [
            ("R_syn1", s.params.r_syn1),
            ("R_syn2", s.params.r_syn2),
            ("R_out", s.params.r_out),
        ] {
            if r < limits.min_resistance_ohm {
                report.violations.push(Violation {
                    element: element.clone(),
                    limit: format!("{name} >= {} Ω", limits.min_resistance_ohm),
                    margin: r / limits.min_resistance_ohm,
                });
            }
        }
    }
    for n in &g.neurons {
        for (name, r) in [("R1", n.params.r1), ("R2", n.params.r2)] {
            if r < limits.min_resistance_ohm {
                report.violations.push(Violation {
                    element: format!("neuron {}", n.id),
                    limit: format!("{name} >= {} Ω", limits.min_resistance_ohm),
                    margin: r / limits.min_resistance_ohm,
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn lambda_maps_to_one_microhenry() {
        let hw = HardwareDefaults::default();
        // (10 nH / 5 Ω) / 0.02 * 10 Ω = 1 µH.
        assert_relative_eq!(l_syn_for_lambda(0.02, &hw), 1000.0);
        // Exact round trip.
        let l = l_syn_for_lambda(0.02, &hw);
        assert_eq!(lambda_from_hardware(l, &hw), 0.02);
    }

    #[test]
    fn lif_bias_mapping() {
        let hw = HardwareDefaults::default();
        let spec = LifSpec::new(
            vec![vec![1.0, -0.5], vec![-0.5, 1.0]],
            vec![InputDrive::zero(), InputDrive::zero()],
        );
        let g = from_lif(&spec, &hw).unwrap();
        // u0 = 0.95, I_c = 30 -> quiescent 28.5 -> bias 57.
        for n in &g.neurons {
            assert_relative_eq!(n.params.i_bias, 57.0);
        }
        assert_eq!(g.synapses.len(), 4);
        for s in &g.synapses {
            assert_relative_eq!(s.params.l_syn, 1000.0);
        }
        // Positive weights inhibit (negative bias), negative excite.
        let diag = g
            .synapses
            .iter()
            .find(|s| s.source == "n1" && s.target == "n1")
            .unwrap();
        assert!(diag.params.i_bias_h < 0.0);
        let cross = g
            .synapses
            .iter()
            .find(|s| s.source == "n2" && s.target == "n1")
            .unwrap();
        assert!(cross.params.i_bias_h > 0.0);
        // Uniform ratio: |bias| proportional to |weight|.
        assert_relative_eq!(
            diag.params.i_bias_h.abs() / cross.params.i_bias_h.abs(),
            2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_matrix_emits_no_synapses() {
        let hw = HardwareDefaults::default();
        let spec = LifSpec::new(
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![InputDrive::zero(), InputDrive::zero()],
        );
        let g = from_lif(&spec, &hw).unwrap();
        assert_eq!(g.synapses.len(), 0);
        assert_eq!(g.neurons.len(), 2);
    }

    #[test]
    fn lif_rejects_bad_lambda() {
        let hw = HardwareDefaults::default();
        let mut spec = LifSpec::new(vec![vec![1.0]], vec![InputDrive::zero()]);
        spec.lambda = 0.0;
        assert!(from_lif(&spec, &hw).is_err());
    }

    #[test]
    fn oversized_weight_is_unrealizable() {
        let hw = HardwareDefaults::default();
        let spec = LifSpec::new(vec![vec![1e6]], vec![InputDrive::zero()]);
        match from_lif(&spec, &hw) {
            Err(Error::Unrealizable(_)) => {}
            other => panic!("expected Unrealizable, got {other:?}"),
        }
    }

    #[test]
    fn gate_probability_identities() {
        for delta in [0.01f64, 0.1, 0.3] {
            let l = 2.0 * ((1.0 - delta) / delta).ln();
            let b = 2.5 * l;
            let p3 = gate_probability(3, l, b, 3).unwrap();
            let p2 = gate_probability(2, l, b, 3).unwrap();
            assert_abs_diff_eq!(p3, 1.0 - delta, epsilon = 1e-12);
            assert_abs_diff_eq!(p2, delta, epsilon = 1e-12);
        }
    }

    #[test]
    fn gate_probability_numeric_example() {
        let delta: f64 = 0.1;
        let l = 2.0 * ((1.0 - delta) / delta).ln();
        let b = 2.5 * l;
        assert_abs_diff_eq!(l, 4.394, epsilon = 1e-3);
        assert_abs_diff_eq!(b, 10.986, epsilon = 1e-3);
        assert_abs_diff_eq!(gate_probability(3, l, b, 3).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn gate_probability_monotone_in_firing_count() {
        let l = 3.0;
        let b = 7.5;
        let mut prev = 0.0;
        for n in 0..=5 {
            let p = gate_probability(n, l, b, 5).unwrap();
            assert!(p > prev);
            prev = p;
        }
        assert!(gate_probability(4, l, b, 3).is_err());
    }

    #[test]
    fn realizability_reports_squares_and_violations() {
        let hw = HardwareDefaults::default();
        let spec = LifSpec::new(vec![vec![1.0]], vec![InputDrive::zero()]);
        let g = from_lif(&spec, &hw).unwrap();
        let report = check_realizability(&g, &RealizabilityLimits::nbn());
        // 1 µH on 33 pH/sq -> ~30303 squares.
        assert_relative_eq!(report.inductor_squares[0].1, 30303.0, max_relative = 1e-3);
        assert!(report.passed());

        // Force a bias at the channel critical current.
        let mut bad = g.clone();
        bad.synapses[0].params.i_bias_h = 31.0;
        bad.synapses[0].params.channel.i_c = 30.0;
        let report = check_realizability(&bad, &RealizabilityLimits::nbn());
        assert!(!report.passed());
        assert!(report.violations[0].limit.contains("critical current"));
    }

    #[test]
    fn quasi_static_threshold_shrinks_with_bias() {
        let hw = HardwareDefaults::default();
        let t57 = quasi_static_threshold(&hw.neuron_params(57.0));
        let t58 = quasi_static_threshold(&hw.neuron_params(58.0));
        assert!(t58 < t57);
        assert!(t58 > 0.0);
    }

    #[test]
    fn compositional_gate_anchor_biases() {
        let hw = HardwareDefaults::default();
        let spec = CompositionalSpec {
            nodes: vec![
                ("in1".into(), 0.0),
                ("in2".into(), 0.0),
                ("in3".into(), 0.0),
                ("out".into(), 2.5),
            ],
            edges: vec![
                ("in1".into(), "out".into(), 1.0),
                ("in2".into(), "out".into(), 1.0),
                ("in3".into(), "out".into(), 1.0),
            ],
            temperature: 1.0,
        };
        let g = from_compositional(&spec, &hw).unwrap();
        for n in &g.neurons {
            if n.id.starts_with("in") {
                assert_relative_eq!(n.params.i_bias, 58.0);
            } else {
                assert_abs_diff_eq!(n.params.i_bias, 54.6, epsilon = 1e-6);
            }
            assert_relative_eq!(n.params.nw2.i_c, 30.0);
        }
        for s in &g.synapses {
            assert_relative_eq!(s.params.i_bias_h, 27.0);
        }
        // An OR-like node (threshold 0.5) anchors at the OR output bias.
        let or_spec = CompositionalSpec {
            nodes: vec![("in1".into(), 0.0), ("out".into(), 0.5)],
            edges: vec![("in1".into(), "out".into(), 1.0)],
            temperature: 1.0,
        };
        let g = from_compositional(&or_spec, &hw).unwrap();
        assert_relative_eq!(g.neurons[1].params.i_bias, 57.0);
    }

    #[test]
    fn empty_compositional_is_empty_network() {
        let hw = HardwareDefaults::default();
        let spec = CompositionalSpec {
            nodes: vec![],
            edges: vec![],
            temperature: 1.0,
        };
        let g = from_compositional(&spec, &hw).unwrap();
        assert!(g.neurons.is_empty() && g.synapses.is_empty());
    }
}
