use std::fmt;

use serde::Serialize;

use super::{Circuit, GateDegree, GateId, GateKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub gate: Option<GateId>,
    pub message: String,
}

/// Outcome of [`Circuit::validate`]. The aggregate figures are only present
/// when the gate list is structurally sound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub size: usize,
    pub degree: Option<GateDegree>,
    pub vars: Option<usize>,
    pub depth: Option<usize>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn has(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v.gate {
                Some(g) => write!(f, "{} at {}: {}", v.rule, g, v.message)?,
                None => write!(f, "{}: {}", v.rule, v.message)?,
            }
        }
        Ok(())
    }
}

impl Circuit {
    /// Checks child references, acyclicity, per-kind arity, the scalar-gate
    /// degree rule and the output list.
    pub fn validate(&self) -> ValidationReport {
        let gates = self.gates();
        let n = gates.len();
        let mut violations = Vec::new();
        let mut push = |rule, gate: Option<GateId>, message: String| {
            violations.push(Violation {
                rule,
                gate,
                message,
            })
        };

        let mut ordered = true;
        for (i, gate) in gates.iter().enumerate() {
            let id = GateId(i);
            for c in &gate.children {
                if c.0 >= n {
                    ordered = false;
                    push(
                        "dangling-child",
                        Some(id),
                        format!("child {c} does not exist"),
                    );
                } else if c.0 >= i {
                    ordered = false;
                }
            }
            let k = gate.children.len();
            let arity_ok = match gate.kind {
                GateKind::Input(_) | GateKind::Const(_) => k == 0,
                GateKind::Add | GateKind::Mul => k >= 1,
                GateKind::Scal => k == 2,
            };
            if !arity_ok {
                push(
                    "arity",
                    Some(id),
                    format!("{} gate with {k} children", gate.kind.name()),
                );
            }
        }

        if !ordered {
            match find_cycle(self) {
                Some(g) => push(
                    "acyclicity",
                    Some(g),
                    "gate lies on a directed cycle".to_string(),
                ),
                None => {
                    for (i, gate) in gates.iter().enumerate() {
                        if let Some(c) = gate.children.iter().find(|c| c.0 >= i && c.0 < n) {
                            push(
                                "topological-order",
                                Some(GateId(i)),
                                format!("child {c} is declared after its parent"),
                            );
                        }
                    }
                }
            }
        }

        if self.outputs().is_empty() {
            push("output-missing", None, "circuit has no outputs".to_string());
        }
        for o in self.outputs() {
            if o.0 >= n {
                ordered = false;
                push(
                    "output-missing",
                    Some(*o),
                    format!("output {o} does not exist"),
                );
            }
        }

        let mut report = ValidationReport {
            ok: false,
            violations: Vec::new(),
            size: n,
            degree: None,
            vars: None,
            depth: None,
        };

        if ordered {
            let deg = self.degrees();
            for (i, gate) in gates.iter().enumerate() {
                if gate.kind == GateKind::Scal
                    && gate.children.len() == 2
                    && !gate.children.iter().any(|c| deg[c.0] <= GateDegree::ZERO)
                {
                    push(
                        "scal-child-degree",
                        Some(GateId(i)),
                        "scalar gate without a degree-0 child".to_string(),
                    );
                }
            }
            if !self.outputs().is_empty() {
                report.degree = Some(self.degree());
                report.depth = Some(self.depth());
            }
            report.vars = Some(self.num_vars());
        }

        report.ok = violations.is_empty();
        report.violations = violations;
        report
    }
}

/// Returns some gate on a directed cycle, if any. Dangling references are
/// ignored.
fn find_cycle(c: &Circuit) -> Option<GateId> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let gates = c.gates();
    let mut mark = vec![Mark::New; gates.len()];
    for start in 0..gates.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Active;
        while let Some((node, next)) = stack.last().copied() {
            let children = &gates[node].children;
            if next < children.len() {
                stack.last_mut().unwrap().1 += 1;
                let child = children[next].0;
                if child >= gates.len() {
                    continue;
                }
                match mark[child] {
                    Mark::Active => return Some(GateId(child)),
                    Mark::New => {
                        mark[child] = Mark::Active;
                        stack.push((child, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}
