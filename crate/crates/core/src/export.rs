//! CSV writers. Floats use the shortest decimal that parses back to the same
//! bits, so identical runs produce byte-identical files.

use std::io::{self, Write};

use crate::analysis::{DynamicsVerdict, ErrorTable, RateFit, TruncationEntry};
use crate::schemes::Trajectory;

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_owned()
    } else if x.is_nan() {
        "NaN".to_owned()
    } else if x > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

/// `t,I` for baselines; `t,I,Y,truncated` when the trajectory carries
/// log-states.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    match (&traj.log_values, &traj.truncated) {
        (Some(y), Some(trunc)) => {
            writeln!(w, "t,I,Y,truncated")?;
            for (k, t) in traj.times().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_float(t),
                    fmt_float(traj.values[k]),
                    fmt_float(y[k]),
                    u8::from(trunc[k])
                )?;
            }
        }
        _ => {
            writeln!(w, "t,I")?;
            for (k, t) in traj.times().enumerate() {
                writeln!(w, "{},{}", fmt_float(t), fmt_float(traj.values[k]))?;
            }
        }
    }
    Ok(())
}

pub fn write_error_table<W: Write>(mut w: W, table: &ErrorTable) -> io::Result<()> {
    writeln!(w, "h,error")?;
    for (h, e) in table.step_sizes.iter().zip(&table.errors) {
        writeln!(w, "{},{}", fmt_float(*h), fmt_float(*e))?;
    }
    Ok(())
}

/// Error table with a slope-one reference line through the coarsest point,
/// for log-log plots.
pub fn write_loglog<W: Write>(mut w: W, table: &ErrorTable) -> io::Result<()> {
    writeln!(w, "h,error,reference")?;
    let anchor = table
        .step_sizes
        .iter()
        .zip(&table.errors)
        .max_by(|a, b| a.0.total_cmp(b.0));
    for (h, e) in table.step_sizes.iter().zip(&table.errors) {
        let reference = anchor.map_or(f64::NAN, |(h0, e0)| e0 * h / h0);
        writeln!(
            w,
            "{},{},{}",
            fmt_float(*h),
            fmt_float(*e),
            fmt_float(reference)
        )?;
    }
    Ok(())
}

pub fn write_rate_fit<W: Write>(mut w: W, fit: &RateFit) -> io::Result<()> {
    writeln!(w, "q,residual")?;
    writeln!(w, "{},{}", fmt_float(fit.q), fmt_float(fit.residual))
}

pub fn write_truncation<W: Write>(mut w: W, rows: &[TruncationEntry]) -> io::Result<()> {
    writeln!(w, "set,I0,h,percent")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.set,
            fmt_float(r.i0),
            fmt_float(r.h),
            fmt_float(r.percent)
        )?;
    }
    Ok(())
}

pub fn write_dynamics<W: Write>(mut w: W, rows: &[(u64, DynamicsVerdict)]) -> io::Result<()> {
    writeln!(w, "seed,kind,lyapunov,crossings,terminal")?;
    for (seed, v) in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            seed,
            v.kind.name(),
            fmt_float(v.lyapunov_estimate),
            v.lambda_crossings,
            fmt_float(v.terminal_value)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::SchemeKind;
    use proptest::prelude::*;

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(0.25), "0.25");
        assert_eq!(fmt_float(1.0), "1.0");
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_float(1e-300), "1e-300");
    }

    #[test]
    fn trajectory_headers() {
        let traj = Trajectory {
            scheme: SchemeKind::Lcm,
            h: 0.5,
            values: vec![1.0, 2.0],
            log_values: Some(vec![0.0, 2f64.ln()]),
            truncated: Some(vec![false, true]),
            truncation_count: 1,
            domain_violation: None,
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,I,Y,truncated");
        assert_eq!(lines[1], "0.0,1.0,0.0,0");
        assert!(lines[2].starts_with("0.5,2.0,0.69314718055994") && lines[2].ends_with(",1"));

        let base = Trajectory {
            scheme: SchemeKind::Milstein,
            log_values: None,
            truncated: None,
            ..traj
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &base).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t,I\n0.0,1.0\n"));
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
