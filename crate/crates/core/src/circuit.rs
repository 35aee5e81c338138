//! Element-level circuit model: nanowire and hTron parameters, the neuron
//! and synapse state equations, kinetic inductance, and the hysteretic
//! switching rule.
//!
//! A nanowire neuron is two shunted relaxation oscillators (control and
//! main) in a loop; its continuous state is the four branch currents
//! `i1..i4` plus two binary switch flags `n1`, `n2`. An hTron synapse is a
//! thermally switched channel feeding an L/R integration loop with an
//! output branch; its state is five branch currents `i1..i5` plus the
//! channel flag `h`. Units: ns, µA, nH, Ω (voltages in µV).

use crate::error::{Error, Result};

/// Fraction of the critical current at which the kinetic-inductance
/// evaluation is clamped, avoiding the singularity at `|i| = I_c`.
pub const KINETIC_CLAMP: f64 = 0.999;

/// Parameters of one superconducting nanowire (or an hTron channel).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NanowireParams {
    /// Inductance at zero current (nH).
    pub l0: f64,
    /// Critical current (µA): switching threshold to the resistive state.
    pub i_c: f64,
    /// Retrapping current (µA): threshold for returning to the
    /// superconducting state. Must satisfy `0 < i_r < i_c`.
    pub i_r: f64,
    /// Hotspot resistance in the switched state (Ω).
    pub r_hs: f64,
}

impl NanowireParams {
    /// Conventional defaults: retrapping at half the critical current,
    /// hotspot resistance 100 Ω (order 10² Ω for NbN films).
    pub fn new(l0: f64, i_c: f64) -> Self {
        Self {
            l0,
            i_c,
            i_r: 0.5 * i_c,
            r_hs: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nanowire L0 must be positive, got {}",
                self.l0
            )));
        }
        if !(self.i_c > 0.0 && self.i_r > 0.0 && self.i_r < self.i_c) {
            return Err(Error::InvalidParameter(format!(
                "nanowire currents must satisfy 0 < I_r < I_c, got I_r = {}, I_c = {}",
                self.i_r, self.i_c
            )));
        }
        if !(self.r_hs > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nanowire R_hs must be positive, got {}",
                self.r_hs
            )));
        }
        Ok(())
    }
}

/// Parameters of a nanowire neuron: control oscillator (`nw1`, shunt `r1`,
/// branch inductor `l1`) and main oscillator (`nw2`, `r2`, `l2`) biased by
/// `i_bias` around the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    /// Control-oscillator nanowire.
    pub nw1: NanowireParams,
    /// Main-oscillator nanowire; spikes are read from its switch flag.
    pub nw2: NanowireParams,
    /// Control-branch inductance (nH).
    pub l1: f64,
    /// Main-branch inductance (nH).
    pub l2: f64,
    /// Control-oscillator shunt resistance (Ω).
    pub r1: f64,
    /// Main-oscillator shunt resistance (Ω); acts as the thermal gate for
    /// downstream synapses.
    pub r2: f64,
    /// Loop bias current (µA). The symmetric quiescent branch current is
    /// `i_bias / 2`.
    pub i_bias: f64,
    /// Reproduce the literal printed form of the loop equation, whose
    /// fourth line couples `i3·R1` instead of the symmetric `i2·R1`.
    pub eq5_literal: bool,
}

impl NeuronParams {
    pub fn validate(&self) -> Result<()> {
        self.nw1.validate()?;
        self.nw2.validate()?;
        for (name, v) in [
            ("L1", self.l1),
            ("L2", self.l2),
            ("R1", self.r1),
            ("R2", self.r2),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "neuron {name} must be positive, got {v}"
                )));
            }
        }
        let i_q = self.i_bias.abs() / 2.0;
        if i_q >= self.nw1.i_c.min(self.nw2.i_c) {
            return Err(Error::InvalidParameter(format!(
                "neuron bias {} µA puts quiescent branch current {} µA at or above I_c; \
                 the quiescent state must be subcritical",
                self.i_bias, i_q
            )));
        }
        Ok(())
    }
}

/// Parameters of an hTron synapse: superconducting channel in parallel with
/// `r_syn1`, an `l_syn` integration loop closed through `r_syn2`, and an
/// output branch `l_out`/`r_out` into the downstream neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseParams {
    /// hTron channel nanowire (`L_nw,h`, `I_c,h`, `I_r,h`, `R_hs`).
    pub channel: NanowireParams,
    /// Integration-loop inductance (nH).
    pub l_syn: f64,
    /// Loop resistance adjacent to the channel (Ω).
    pub r_syn1: f64,
    /// Loop resistance adjacent to the output branch (Ω).
    pub r_syn2: f64,
    /// Output resistance into the downstream neuron (Ω).
    pub r_out: f64,
    /// Output-branch inductance (nH).
    pub l_out: f64,
    /// Synapse bias current (µA), signed: negative bias inverts the output
    /// current and realizes an inhibitory connection.
    pub i_bias_h: f64,
    /// hTron suppression factor, `0 < beta < 1`: with the upstream neuron
    /// firing, the channel's effective critical current drops to
    /// `beta * i_bias_h`.
    pub beta: f64,
}

impl SynapseParams {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        for (name, v) in [
            ("L_syn", self.l_syn),
            ("L_out", self.l_out),
            ("R_syn1", self.r_syn1),
            ("R_syn2", self.r_syn2),
            ("R_out", self.r_out),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "synapse {name} must be positive, got {v}"
                )));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "synapse beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.i_bias_h.abs() >= self.channel.i_c {
            return Err(Error::InvalidParameter(format!(
                "synapse bias |{}| µA must stay below the channel critical current {} µA",
                self.i_bias_h, self.channel.i_c
            )));
        }
        Ok(())
    }
}

/// Continuous state of a neuron plus its two switch flags.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeuronState {
    /// Branch currents (µA): `i[0]` control nanowire, `i[1]` control
    /// shunt, `i[2]` main nanowire, `i[3]` main shunt.
    pub i: [f64; 4],
    /// Control-nanowire switch flag (0 superconducting, 1 resistive).
    pub n1: u8,
    /// Main-nanowire switch flag; a rising edge is a spike.
    pub n2: u8,
}

/// Continuous state of a synapse plus its channel flag.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynapseState {
    /// Branch currents (µA): `i[0]` channel, `i[1]` through `r_syn1`,
    /// `i[2]` integration loop, `i[3]` through `r_syn2`, `i[4]` output.
    pub i: [f64; 5],
    /// Channel switch flag.
    pub h: u8,
}

/// Current-dependent kinetic inductance
/// `L(i) = L0 (1 − (i / I_c)²)^(−1/2)`, with `|i|` clamped to
/// `0.999 I_c` inside the evaluation so the expression stays finite as a
/// switching threshold is crossed. Even in `i` and nondecreasing in `|i|`.
pub fn kinetic_inductance(i: f64, p: &NanowireParams) -> f64 {
    let x = (i.abs().min(KINETIC_CLAMP * p.i_c)) / p.i_c;
    p.l0 / (1.0 - x * x).sqrt()
}

/// Right-hand side of the neuron state equations.
///
/// `i_in` is the total drive at the loop node (external input plus summed
/// synapse output currents) and `di_in_dt` its analytic time derivative.
/// Returns the derivatives of the four branch currents; the switch flags
/// are read from `s` and only change at events.
///
/// The oscillator lines are the shunted-nanowire equations
/// `di1 = (i2 R1 − i1 R_hs n1)/L_nw(i1)` and
/// `di3 = (i4 R2 − i3 R_hs n2)/L_nw(i3)`. The loop closure enforces the
/// source constraint `(i3 + i4) − (i1 + i2) = I_bias + i_in(t)`: the bias
/// and input are injected by real current sources, so the current they
/// supply is replenished after each resistive (dissipative) phase. This is
/// what sustains the relaxation oscillation at constant drive: without the
/// constraint, every spike bleeds loop flux and the neuron is a one-shot.
pub fn neuron_rhs(
    s: &NeuronState,
    p: &NeuronParams,
    i_in: f64,
    di_in_dt: f64,
) -> Result<[f64; 4]> {
    if !(s.i.iter().all(|v| v.is_finite()) && i_in.is_finite() && di_in_dt.is_finite()) {
        return Err(Error::Diverged { t_ns: f64::NAN });
    }
    let [i1, i2, i3, i4] = s.i;
    let di1 = (i2 * p.r1 - i1 * p.r_hs_term(s.n1)) / kinetic_inductance(i1, &p.nw1);
    let di3 = (i4 * p.r2 - i3 * p.nw2_hs_term(s.n2)) / kinetic_inductance(i3, &p.nw2);
    let l_sum = p.l1 + p.l2;
    // Loop voltage balance: the drop around the superconducting loop is
    // shared by L1 + L2. The `eq5_literal` variant reproduces the printed
    // asymmetry (i3·R1 in place of i2·R1 in the fourth line).
    let di5 = -(i2 * p.r1 + i4 * p.r2) / l_sum;
    let di2 = di5 - di1;
    let loop_term = if p.eq5_literal {
        -(i3 * p.r1 + i4 * p.r2) / l_sum
    } else {
        di5
    };
    let di4 = loop_term + di_in_dt - di3;
    Ok([di1, di2, di3, di4])
}

impl NeuronParams {
    #[inline]
    fn r_hs_term(&self, n1: u8) -> f64 {
        if n1 == 1 {
            self.nw1.r_hs
        } else {
            0.0
        }
    }

    #[inline]
    fn nw2_hs_term(&self, n2: u8) -> f64 {
        if n2 == 1 {
            self.nw2.r_hs
        } else {
            0.0
        }
    }
}

/// Right-hand side of the synapse state equations.
///
/// `di1`, `di3`, `di5` follow from the three loop equations; `di2` and
/// `di4` are fixed by current conservation (`di2 = −di1 − di3`,
/// `di4 = di3 − di5`), so `i1+i2+i3` and `i3−i4−i5` are invariant along
/// trajectories.
pub fn synapse_rhs(s: &SynapseState, p: &SynapseParams) -> Result<[f64; 5]> {
    if !s.i.iter().all(|v| v.is_finite()) {
        return Err(Error::Diverged { t_ns: f64::NAN });
    }
    let [i1, i2, _i3, i4, i5] = s.i;
    let hs = if s.h == 1 { p.channel.r_hs } else { 0.0 };
    let di1 = (i2 * p.r_syn1 - i1 * hs) / kinetic_inductance(i1, &p.channel);
    let di3 = (i2 * p.r_syn1 - i4 * p.r_syn2) / p.l_syn;
    let di5 = (i4 * p.r_syn2 - i5 * p.r_out) / p.l_out;
    let di2 = -di1 - di3;
    let di4 = di3 - di5;
    Ok([di1, di2, di3, di4, di5])
}

/// Hysteretic switch update: a superconducting element (`flag = 0`) goes
/// resistive when `|i| > I_c`; a resistive element returns superconducting
/// when `|i| < I_r`; between the two thresholds the flag is unchanged.
pub fn update_switch(flag: u8, i: f64, p: &NanowireParams) -> u8 {
    match flag {
        0 if i.abs() > p.i_c => 1,
        1 if i.abs() < p.i_r => 0,
        f => f,
    }
}

/// Effective switching threshold for the hTron channel.
///
/// With the upstream main oscillator firing, gate heat suppresses the
/// channel critical current to `beta * i_bias_h`, guaranteeing the channel
/// switches; otherwise the bare `I_c,h` applies.
pub fn effective_htron_threshold(p: &SynapseParams, upstream_firing: u8) -> f64 {
    if upstream_firing == 1 {
        p.beta * p.i_bias_h
    } else {
        p.channel.i_c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn nw(l0: f64, i_c: f64) -> NanowireParams {
        NanowireParams::new(l0, i_c)
    }

    fn neuron() -> NeuronParams {
        NeuronParams {
            nw1: nw(10.0, 30.0),
            nw2: nw(10.0, 30.0),
            l1: 20.0,
            l2: 20.0,
            r1: 5.0,
            r2: 5.0,
            i_bias: 57.0,
            eq5_literal: false,
        }
    }

    fn synapse() -> SynapseParams {
        SynapseParams {
            channel: nw(100.0, 30.0),
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
    fn kinetic_inductance_zero_current_is_l0() {
        assert_eq!(kinetic_inductance(0.0, &nw(10.0, 30.0)), 10.0);
    }

    #[test]
    fn kinetic_inductance_at_clamp_point() {
        let p = nw(1.0, 30.0);
        // Closed form at the clamp: 1/sqrt(1 − 0.999²) ≈ 22.3664.
        let expect = 1.0 / (1.0 - 0.999f64.powi(2)).sqrt();
        assert_relative_eq!(kinetic_inductance(0.999 * 30.0, &p), expect, max_relative = 1e-12);
        // Beyond I_c the clamp holds the value.
        assert_relative_eq!(kinetic_inductance(45.0, &p), expect, max_relative = 1e-12);
        assert_abs_diff_eq!(expect, 22.3664, epsilon = 1e-3);
    }

    #[test]
    fn kinetic_inductance_half_critical() {
        // 10 / sqrt(0.75) ≈ 11.547 nH.
        let l = kinetic_inductance(15.0, &nw(10.0, 30.0));
        assert_relative_eq!(l, 10.0 / 0.75f64.sqrt(), max_relative = 1e-12);
        assert_abs_diff_eq!(l, 11.547, epsilon = 1e-3);
    }

    #[test]
    fn kinetic_inductance_even_and_monotone() {
        let p = nw(10.0, 30.0);
        for i in [0.0, 3.0, 15.0, 29.0, 29.97] {
            assert_eq!(kinetic_inductance(i, &p), kinetic_inductance(-i, &p));
        }
        let mut prev = 0.0;
        for k in 0..400 {
            let l = kinetic_inductance(k as f64 * 0.1, &p);
            assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn neuron_rhs_equilibrium_is_zero() {
        let s = NeuronState::default();
        let d = neuron_rhs(&s, &neuron(), 0.0, 0.0).unwrap();
        assert_eq!(d, [0.0; 4]);
    }

    #[test]
    fn neuron_rhs_first_line_hand_evaluated() {
        // i2 = 10 µA, others 0, n1 = 0: di1/dt = i2·R1 / L_nw(0) = 5 µA/ns.
        let s = NeuronState {
            i: [0.0, 10.0, 0.0, 0.0],
            n1: 0,
            n2: 0,
        };
        let d = neuron_rhs(&s, &neuron(), 0.0, 0.0).unwrap();
        assert_relative_eq!(d[0], 10.0 * 5.0 / 10.0, max_relative = 1e-12);
    }

    #[test]
    fn neuron_rhs_hotspot_term() {
        // i1 = 10, i2 = 10, n1 = 1: di1/dt = (50 − 1000) µV / L_nw(10 µA).
        let p = neuron();
        let s = NeuronState {
            i: [10.0, 10.0, 0.0, 0.0],
            n1: 1,
            n2: 0,
        };
        let d = neuron_rhs(&s, &p, 0.0, 0.0).unwrap();
        let lnw = kinetic_inductance(10.0, &p.nw1);
        assert_relative_eq!(d[0], (50.0 - 1000.0) / lnw, max_relative = 1e-12);
    }

    #[test]
    fn neuron_rhs_literal_form_differs_only_in_fourth_line() {
        let mut p = neuron();
        let s = NeuronState {
            i: [1.0, 2.0, 3.0, 4.0],
            n1: 0,
            n2: 0,
        };
        let sym = neuron_rhs(&s, &p, 1.0, 0.5).unwrap();
        p.eq5_literal = true;
        let lit = neuron_rhs(&s, &p, 1.0, 0.5).unwrap();
        assert_eq!(sym[0], lit[0]);
        assert_eq!(sym[1], lit[1]);
        assert_eq!(sym[2], lit[2]);
        // Fourth line swaps i2·R1 for i3·R1 in the loop term.
        let delta = -(3.0 - 2.0) * p.r1 / (p.l1 + p.l2);
        assert_relative_eq!(lit[3] - sym[3], delta, max_relative = 1e-12);
    }

    #[test]
    fn neuron_rhs_rejects_non_finite_state() {
        let s = NeuronState {
            i: [f64::NAN, 0.0, 0.0, 0.0],
            n1: 0,
            n2: 0,
        };
        assert!(neuron_rhs(&s, &neuron(), 0.0, 0.0).is_err());
    }

    #[test]
    fn synapse_rhs_equilibrium_is_zero() {
        let d = synapse_rhs(&SynapseState::default(), &synapse()).unwrap();
        assert_eq!(d, [0.0; 5]);
    }

    #[test]
    fn synapse_rhs_third_line_hand_evaluated() {
        // i2 = 100 µA into R_syn1 = 10 Ω over L_syn = 1 µH: the loop sees
        // 1 mV across 1 µH, i.e. 10³ A/s = 1 µA/ns.
        let s = SynapseState {
            i: [0.0, 100.0, 0.0, 0.0, 0.0],
            h: 0,
        };
        let d = synapse_rhs(&s, &synapse()).unwrap();
        assert_relative_eq!(d[2], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn synapse_rhs_conservation_structure() {
        let s = SynapseState {
            i: [3.0, -1.5, 7.25, 0.5, 2.0],
            h: 1,
        };
        let d = synapse_rhs(&s, &synapse()).unwrap();
        assert_abs_diff_eq!(d[0] + d[1] + d[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[2] - d[3] - d[4], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn switch_crosses_critical_current() {
        let p = nw(10.0, 30.0);
        assert_eq!(update_switch(0, 1.01 * 30.0, &p), 1);
        assert_eq!(update_switch(0, -1.01 * 30.0, &p), 1);
        assert_eq!(update_switch(0, 0.99 * 30.0, &p), 0);
    }

    #[test]
    fn switch_hysteresis_band_holds() {
        let p = nw(10.0, 30.0);
        // Between I_r and I_c the flag is sticky in both directions.
        assert_eq!(update_switch(1, 20.0, &p), 1);
        assert_eq!(update_switch(0, 20.0, &p), 0);
    }

    #[test]
    fn switch_retraps_below_retrapping_current() {
        let p = nw(10.0, 30.0);
        assert_eq!(update_switch(1, 0.9 * p.i_r, &p), 0);
    }

    #[test]
    fn htron_threshold_quiescent_and_suppressed() {
        let p = synapse();
        assert_eq!(effective_htron_threshold(&p, 0), 30.0);
        assert_relative_eq!(effective_htron_threshold(&p, 1), 13.5, max_relative = 1e-12);
        let mut zero_bias = p;
        zero_bias.i_bias_h = 0.0;
        assert_eq!(effective_htron_threshold(&zero_bias, 1), 0.0);
    }

    #[test]
    fn params_validation_catches_violations() {
        let mut p = neuron();
        p.i_bias = 61.0; // quiescent 30.5 > I_c
        assert!(p.validate().is_err());
        let mut s = synapse();
        s.beta = 1.0;
        assert!(s.validate().is_err());
        let mut s2 = synapse();
        s2.i_bias_h = 31.0;
        assert!(s2.validate().is_err());
        let mut w = nw(10.0, 30.0);
        w.i_r = 30.0;
        assert!(w.validate().is_err());
    }
}
