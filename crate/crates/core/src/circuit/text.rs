//! Line-oriented circuit format.
//!
//! ```text
//! # (x + y) * ((x + y) + z)
//! input x 0
//! input y 1
//! input z 2
//! add s x y
//! add t z s
//! mul m s t
//! output m
//! ```
//!
//! Ids are alphanumeric tokens (underscores allowed); children must be
//! declared before use. Printing a parsed circuit reproduces its gate lines
//! in order, followed by its output lines.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use super::{Circuit, Gate, GateId, GateKind};
use crate::error::{Error, Result};

fn valid_id(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut gates: Vec<Gate> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut lines: Vec<usize> = Vec::new();
    let mut ids: HashMap<String, GateId> = HashMap::new();
    let mut outputs = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some((&op, rest)) = toks.split_first() else {
            continue;
        };

        if op == "output" {
            let [name] = rest else {
                return Err(err("expected `output <id>`".into()));
            };
            let id = *ids
                .get(*name)
                .ok_or_else(|| err(format!("unknown gate `{name}`")))?;
            outputs.push(id);
            continue;
        }

        let Some((&name, args)) = rest.split_first() else {
            return Err(err(format!("`{op}` needs a gate id")));
        };
        if !valid_id(name) {
            return Err(err(format!("invalid gate id `{name}`")));
        }
        if ids.contains_key(name) {
            return Err(err(format!("gate `{name}` declared twice")));
        }
        let children = |args: &[&str]| -> Result<Vec<GateId>> {
            args.iter()
                .map(|a| {
                    ids.get(*a)
                        .copied()
                        .ok_or_else(|| err(format!("child `{a}` is not declared before `{name}`")))
                })
                .collect()
        };
        let gate = match op {
            "input" => {
                let [var] = args else {
                    return Err(err("expected `input <id> <var-index>`".into()));
                };
                let var: u32 = var
                    .parse()
                    .map_err(|_| err(format!("invalid variable index `{var}`")))?;
                Gate::input(var)
            }
            "const" => {
                let [value] = args else {
                    return Err(err("expected `const <id> <integer>`".into()));
                };
                let value: BigInt = value
                    .parse()
                    .map_err(|_| err(format!("invalid integer `{value}`")))?;
                Gate::constant(value)
            }
            "add" | "mul" => {
                if args.is_empty() {
                    return Err(err(format!("`{op}` needs at least one child")));
                }
                let ch = children(args)?;
                if op == "add" {
                    Gate::add(ch)
                } else {
                    Gate::mul(ch)
                }
            }
            "smul" => {
                if args.len() != 2 {
                    return Err(err("expected `smul <id> <child> <child>`".into()));
                }
                let ch = children(args)?;
                Gate::scal(ch[0], ch[1])
            }
            other => return Err(err(format!("unknown gate kind `{other}`"))),
        };
        ids.insert(name.to_string(), GateId(gates.len()));
        names.push(name.to_string());
        lines.push(line_no);
        gates.push(gate);
    }

    if outputs.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "no `output` line".into(),
        });
    }
    let circuit = Circuit::from_gates_unchecked(gates, outputs).with_names(names);
    let report = circuit.validate();
    if let Some(v) = report.violations.first() {
        let line = v.gate.map_or(0, |g| lines[g.0]);
        return Err(Error::Parse {
            line,
            message: format!("{}: {}", v.rule, v.message),
        });
    }
    Ok(circuit)
}

pub fn print_circuit(c: &Circuit) -> String {
    let name = |id: GateId| -> String {
        match c.names() {
            Some(names) => names[id.0].clone(),
            None => format!("g{}", id.0),
        }
    };
    let mut out = String::new();
    for (i, gate) in c.gates().iter().enumerate() {
        let id = name(GateId(i));
        match &gate.kind {
            GateKind::Input(v) => writeln!(out, "input {id} {v}"),
            GateKind::Const(v) => writeln!(out, "const {id} {v}"),
            kind => {
                let _ = write!(out, "{} {id}", kind.name());
                for ch in &gate.children {
                    let _ = write!(out, " {}", name(*ch));
                }
                writeln!(out)
            }
        }
        .expect("writing to a String cannot fail");
    }
    for o in c.outputs() {
        let _ = writeln!(out, "output {}", name(*o));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "\
# (x + y) * ((x + y) + z)
input x 0
input y 1
input z 2
add s x y   # x + y
add t z s
mul m s t
output m
";

    fn strip(text: &str) -> String {
        text.lines()
            .map(|l| {
                l.split('#')
                    .next()
                    .unwrap()
                    .split_whitespace()
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    #[test]
    fn round_trip_is_stable_modulo_comments() {
        let c = parse_circuit(EXAMPLE).unwrap();
        assert_eq!(c.size(), 6);
        assert_eq!(print_circuit(&c), strip(EXAMPLE));
    }

    #[test]
    fn constants_and_scalars() {
        let c = parse_circuit("const c -12\ninput x 3\nsmul y c x\noutput y\n").unwrap();
        assert_eq!(c.gates()[0].const_value(), Some(&BigInt::from(-12)));
        assert_eq!(c.gates()[2].kind, GateKind::Scal);
    }

    #[test]
    fn errors_cite_lines() {
        let e = parse_circuit("input x 0\nadd s x y\noutput s\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_circuit("input x 0\nfrob s x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_circuit("input x 0\ninput x 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_circuit("input x zero\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_circuit("input x 0\ninput y 1\nsmul z x y\noutput z\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert!(parse_circuit("input x 0\n").is_err());
    }

    #[test]
    fn unnamed_circuits_print_positional_ids() {
        let c = Circuit::from_gates(
            vec![
                Gate::input(0),
                Gate::input(1),
                Gate::mul(vec![GateId(0), GateId(1)]),
            ],
            vec![GateId(2)],
        )
        .unwrap();
        let text = print_circuit(&c);
        assert_eq!(text, "input g0 0\ninput g1 1\nmul g2 g0 g1\noutput g2\n");
        assert_eq!(print_circuit(&parse_circuit(&text).unwrap()), text);
    }
}
