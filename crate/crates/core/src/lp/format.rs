//! CPLEX-LP-style text dump for cross-checking programs with external solvers.

use std::fmt::Write;

use super::{LinearProgram, ObjectiveSense, Sense, VarId};
use crate::scalar::Scalar;

fn sanitize(name: &str, idx: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("v{idx}_{cleaned}")
    } else {
        cleaned
    }
}

fn write_expr<T: Scalar>(out: &mut String, names: &[String], terms: &[(VarId, T)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        let c = c.to_f64_lossy();
        if i == 0 {
            let _ = write!(out, " {} {}", c, names[v.0]);
        } else if c < 0.0 {
            let _ = write!(out, " - {} {}", -c, names[v.0]);
        } else {
            let _ = write!(out, " + {} {}", c, names[v.0]);
        }
    }
}

/// Renders `lp` in CPLEX LP format. Names are sanitized and made unique.
pub fn write_lp_format<T: Scalar>(lp: &LinearProgram<T>) -> String {
    let mut seen = std::collections::HashSet::new();
    let names: Vec<String> = lp
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut n = sanitize(&v.name, i);
            if !seen.insert(n.clone()) {
                n = format!("{n}_{i}");
                seen.insert(n.clone());
            }
            n
        })
        .collect();
    let mut out = String::new();
    out.push_str(match lp.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    write_expr(&mut out, &names, &lp.objective);
    out.push_str("\nSubject To\n");
    for (i, row) in lp.rows.iter().enumerate() {
        let _ = write!(out, " r{}_{}:", i, sanitize(&row.name, i));
        write_expr(&mut out, &names, &row.coeffs);
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", op, row.rhs.to_f64_lossy());
    }
    out.push_str("Bounds\n");
    for (i, v) in lp.variables.iter().enumerate() {
        if v.binary {
            continue;
        }
        match (&v.lower, &v.upper) {
            (None, None) => {
                let _ = writeln!(out, " {} free", names[i]);
            }
            (l, u) => {
                let lo = l.as_ref().map_or("-inf".to_string(), |x| x.to_f64_lossy().to_string());
                let hi = u.as_ref().map_or("+inf".to_string(), |x| x.to_f64_lossy().to_string());
                let _ = writeln!(out, " {} <= {} <= {}", lo, names[i], hi);
            }
        }
    }
    let binaries: Vec<&str> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.binary)
        .map(|(i, _)| names[i].as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}
