//! CSV telemetry and the JSON metrics sidecar.

use std::io::{self, Write};

use serde::Serialize;

use crate::sim::{Diagnostics, JumpEvent, Metrics, RunOutput, SimRecord};

pub const CSV_HEADER: &str = "t,q0,q1,q2,q3,w1,w2,w3,h,e_norm,eps0,nu_norm,eta_norm,theta_err_norm,tau1,tau2,tau3,energy,V_lyap";

/// Writes the header and one line per record. Floats use 17 significant
/// digits so files round-trip exactly.
pub fn write_csv<W: Write>(mut w: W, records: &[SimRecord]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let mut line = String::with_capacity(400);
    for r in records {
        line.clear();
        let vals = [
            r.t,
            r.q[0],
            r.q[1],
            r.q[2],
            r.q[3],
            r.omega[0],
            r.omega[1],
            r.omega[2],
        ];
        for v in vals {
            push_float(&mut line, v);
        }
        line.push_str(&format!("{},", r.h.sign() as i8));
        for v in [
            r.e_norm,
            r.eps0,
            r.nu_norm,
            r.eta_norm,
            r.theta_err_norm,
            r.tau[0],
            r.tau[1],
            r.tau[2],
            r.energy,
            r.v_lyap,
        ] {
            push_float(&mut line, v);
        }
        line.pop();
        writeln!(w, "{line}")?;
    }
    w.flush()
}

fn push_float(line: &mut String, v: f64) {
    use std::fmt::Write as _;
    let _ = write!(line, "{v:.16e},");
}

pub fn csv_string(records: &[SimRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    metrics: &'a Metrics,
    jumps: &'a [JumpEvent],
    diagnostics: &'a Diagnostics,
}

/// Pretty JSON with the summary metrics, the jump log and run diagnostics.
pub fn metrics_json(out: &RunOutput) -> String {
    serde_json::to_string_pretty(&Sidecar {
        metrics: &out.metrics,
        jumps: &out.jumps,
        diagnostics: &out.diagnostics,
    })
    .expect("metrics serialize")
}
