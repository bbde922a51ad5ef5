//! CPLEX-style LP text writer.
//!
//! Output is a pure function of the model: names are sanitised in variable
//! order, numbers use Rust's shortest round-trip formatting, and every bound
//! is written explicitly so readers never fall back to their defaults.

use std::collections::HashSet;
use std::fmt::Write;

use super::{LinearModel, Sense, VarKind};

const TERMS_PER_LINE: usize = 6;

pub fn export_lp_text(model: &LinearModel) -> String {
    let var_names = unique_names(model.variables().iter().map(|v| v.name.as_str()), "v");
    let row_names = unique_names(model.constraints().iter().map(|c| c.tag.as_str()), "r");
    let mut out = String::new();

    out.push_str("\\ hullprice model export\n");
    let _ = writeln!(
        out,
        "\\ {} variables, {} constraints",
        model.num_vars(),
        model.num_constraints()
    );
    let _ = writeln!(out, "\\ objective constant: {}", fmt_num(model.objective_constant()));
    out.push_str("Minimize\n obj:");
    let obj: Vec<(usize, f64)> = model.objective().iter().map(|&(v, c)| (v.0, c)).collect();
    if obj.is_empty() {
        // Readers reject an empty objective; anchor it on the first variable.
        match var_names.first() {
            Some(name) => {
                let _ = write!(out, " 0 {name}");
            }
            None => out.push_str(" 0"),
        }
    } else {
        write_terms(&mut out, &obj, &var_names);
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for (c, name) in model.constraints().iter().zip(&row_names) {
        let _ = write!(out, " {name}:");
        let terms: Vec<(usize, f64)> = c.coeffs.iter().map(|&(v, a)| (v.0, a)).collect();
        if terms.is_empty() {
            let _ = write!(out, " 0 {}", var_names.first().map(String::as_str).unwrap_or("x"));
        } else {
            write_terms(&mut out, &terms, &var_names);
        }
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", fmt_num(c.rhs));
    }

    out.push_str("Bounds\n");
    for (v, name) in model.variables().iter().zip(&var_names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {name} = {}", fmt_num(v.lower));
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper));
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {}", fmt_num(v.lower));
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", fmt_num(v.upper));
            }
        }
    }

    let binaries: Vec<&String> = model
        .variables()
        .iter()
        .zip(&var_names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(&chunk.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    for (i, &(j, a)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        if i == 0 && sign == '+' {
            let _ = write!(out, " {} {}", fmt_num(a), names[j]);
        } else {
            let _ = write!(out, " {sign} {} {}", fmt_num(a.abs()), names[j]);
        }
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Maps arbitrary tags to LP-legal identifiers, keeping them unique.
fn unique_names<'a>(raw: impl Iterator<Item = &'a str>, prefix: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, name) in raw.enumerate() {
        let mut s: String = name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
            .collect();
        while s.contains("__") {
            s = s.replace("__", "_");
        }
        while s.ends_with('_') {
            s.pop();
        }
        let starts_ok = s
            .chars()
            .next()
            .map(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
            .unwrap_or(false);
        if !starts_ok {
            s = format!("{prefix}_{s}");
        }
        if !seen.insert(s.clone()) {
            s = format!("{s}_{i}");
            seen.insert(s.clone());
        }
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> LinearModel {
        let mut m = LinearModel::new();
        let x = m.var_cont("x[g1][t1]", 0.0, 10.0);
        let e = m.var_bin("e[g1][t2]");
        let y = m.var_cont("y", f64::NEG_INFINITY, f64::INFINITY);
        m.row(&[(x, 1.0), (e, -2.5)], Sense::Ge, 3.0, "g1.lo.1");
        m.row(&[(x, 1.0), (y, 1.0)], Sense::Eq, 4.0, "bal.1");
        m.set_objective(&[(x, 1.0), (y, -0.5)], 2.0).unwrap();
        m
    }

    #[test]
    fn contains_sections() {
        let text = export_lp_text(&sample());
        assert!(text.contains("Minimize"));
        assert!(text.contains("Bounds"));
        assert!(text.contains("Binaries"));
        assert!(text.contains(" = 4\n"));
        assert!(text.contains("y free"));
        assert!(text.contains("v_e_g1_t2"));
        assert!(text.contains("x_g1_t1 - 2.5 v_e_g1_t2 >= 3"));
    }

    #[test]
    fn byte_identical_exports() {
        assert_eq!(export_lp_text(&sample()), export_lp_text(&sample()));
    }

    #[test]
    fn colliding_names_disambiguated() {
        let names = unique_names(["a[1]", "a(1)", "a_1"].into_iter(), "v");
        assert_eq!(names, vec!["a_1", "a_1_1", "a_1_2"]);
    }
}
