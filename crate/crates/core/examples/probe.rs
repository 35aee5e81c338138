//! Development probe: dump the state trajectory of a driven neuron around
//! its switching events.

use nanowire_snn::circuit::{NanowireParams, NeuronParams};
use nanowire_snn::graph::{assemble, InputDrive, NetworkGraph};
use nanowire_snn::integrator::{simulate, IntegratorConfig};

fn main() {
    let p = NeuronParams {
        nw1: NanowireParams::new(10.0, 30.0),
        nw2: NanowireParams::new(10.0, 30.0),
        l1: 20.0,
        l2: 20.0,
        r1: 5.0,
        r2: 5.0,
        i_bias: 57.0,
        eq5_literal: false,
    };
    let mut g = NetworkGraph::default();
    g.add_neuron(
        "n1",
        p,
        InputDrive::LinearRamp {
            rate_ua_per_ns: 1.0,
            t_start_ns: 0.0,
            cap_ua: Some(22.0),
        },
    );
    let net = assemble(&g).unwrap();
    let mut cfg = IntegratorConfig::default().with_t_end(120.0);
    cfg.sample_dt = 0.05;
    let trace = simulate(&net, &cfg).unwrap();
    println!("# events:");
    for ev in &trace.switch_events {
        println!(
            "#   t={:.4} {} {}",
            ev.t_ns,
            ev.element.label(&net),
            if ev.rising { "0->1" } else { "1->0" }
        );
    }
    println!("t_ns,i1,i2,i3,i4,n1,n2");
    for (k, t) in trace.times.iter().enumerate() {
        let s = &trace.states[k];
        let f = &trace.flags[k];
        println!(
            "{:.4},{:.4},{:.4},{:.4},{:.4},{},{}",
            t, s[0], s[1], s[2], s[3], f[0], f[1]
        );
    }
}
