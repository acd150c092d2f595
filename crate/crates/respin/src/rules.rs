//! Substitution rules and their evaluation on a circuit.
//!
//! Two kinds of rule exist: template equivalences (a source-gate pattern on a
//! qubit pair rewrites to a verified target-basis replacement) and the
//! per-block decomposition rule (the whole block resynthesized around a fixed
//! entangler). Every registered equivalence is checked numerically: pattern
//! and replacement unitaries must agree up to a global phase within 1e-9, so
//! a bad rule is rejected before it can corrupt an adaptation.
//!
//! Evaluating the rules on a circuit yields [`SubstitutionMatch`]es: the
//! substituted gate uids `p_s`, the replacement gates `g_s`, the affected
//! block, and the duration/log-fidelity deltas relative to the reference
//! translation of the substituted segment.

use crate::blocks::{basis_translate, block_cost, Preprocessed};
use crate::circuit::{Circuit, CostModel, Gate, GateKind, GateSet, Operands};
use crate::error::Error;
use crate::kak::kak_decompose;
use crate::linalg::{block_unitary, mat4_equal_up_to_phase};
use serde::Deserialize;
use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

/// Placeholder for a qubit of the pair a template is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    First,
    Second,
}

impl Role {
    fn flip(self) -> Role {
        match self {
            Role::First => Role::Second,
            Role::Second => Role::First,
        }
    }

    fn resolve(self, pair: (usize, usize)) -> usize {
        match self {
            Role::First => pair.0,
            Role::Second => pair.1,
        }
    }
}

/// A gate in a template pattern or replacement, with roles instead of
/// concrete qubit indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternGate {
    pub kind: GateKind,
    pub roles: Vec<Role>,
    pub params: Vec<f64>,
}

impl PatternGate {
    fn one(kind: GateKind, r: Role, params: Vec<f64>) -> PatternGate {
        PatternGate {
            kind,
            roles: vec![r],
            params,
        }
    }

    fn two(kind: GateKind, a: Role, b: Role, params: Vec<f64>) -> PatternGate {
        PatternGate {
            kind,
            roles: vec![a, b],
            params,
        }
    }

    fn mirrored(&self) -> PatternGate {
        PatternGate {
            kind: self.kind,
            roles: self.roles.iter().map(|r| r.flip()).collect(),
            params: self.params.clone(),
        }
    }

    fn instantiate(&self, pair: (usize, usize)) -> Result<Gate, Error> {
        let operands = match self.roles.as_slice() {
            [r] => Operands::Single(r.resolve(pair)),
            [a, b] => Operands::Pair(a.resolve(pair), b.resolve(pair)),
            _ => unreachable!("patterns hold 1- or 2-qubit gates"),
        };
        Gate::new(self.kind, operands, self.params.clone())
    }

    fn matches(&self, gate: &Gate, pair: (usize, usize)) -> bool {
        if gate.kind != self.kind {
            return false;
        }
        let expected = match self.roles.as_slice() {
            [r] => vec![r.resolve(pair)],
            [a, b] => vec![a.resolve(pair), b.resolve(pair)],
            _ => return false,
        };
        if gate.qubits() != expected {
            return false;
        }
        gate.params
            .iter()
            .zip(&self.params)
            .all(|(x, y)| (x - y).abs() <= 1e-12)
    }
}

#[derive(Debug, Clone)]
pub enum RuleBody {
    Template {
        pattern: Vec<PatternGate>,
        replacement: Vec<PatternGate>,
    },
    Decomposition {
        entangler: GateKind,
    },
}

#[derive(Debug, Clone)]
pub struct SubstitutionRule {
    pub name: String,
    pub body: RuleBody,
}

impl SubstitutionRule {
    pub fn template(
        name: &str,
        pattern: Vec<PatternGate>,
        replacement: Vec<PatternGate>,
    ) -> Result<SubstitutionRule, Error> {
        let rule = SubstitutionRule {
            name: name.to_string(),
            body: RuleBody::Template {
                pattern,
                replacement,
            },
        };
        rule.verify()?;
        Ok(rule)
    }

    /// Check pattern/replacement unitary equality up to global phase (1e-9).
    fn verify(&self) -> Result<(), Error> {
        let RuleBody::Template {
            pattern,
            replacement,
        } = &self.body
        else {
            return Ok(());
        };
        if pattern.is_empty() {
            return Err(Error::InvalidRule(format!(
                "`{}` has an empty pattern",
                self.name
            )));
        }
        let pair = (0usize, 1usize);
        let pat: Result<Vec<Gate>, Error> = pattern.iter().map(|p| p.instantiate(pair)).collect();
        let rep: Result<Vec<Gate>, Error> =
            replacement.iter().map(|p| p.instantiate(pair)).collect();
        let u = block_unitary(&pat?, pair)
            .map_err(|e| Error::InvalidRule(format!("`{}` pattern: {e}", self.name)))?;
        let v = block_unitary(&rep?, pair)
            .map_err(|e| Error::InvalidRule(format!("`{}` replacement: {e}", self.name)))?;
        if !mat4_equal_up_to_phase(&u, &v, 1e-9) {
            return Err(Error::InvalidRule(format!(
                "`{}` is not unitary-equivalent",
                self.name
            )));
        }
        Ok(())
    }

    fn mirrored(&self, name: String) -> SubstitutionRule {
        match &self.body {
            RuleBody::Template {
                pattern,
                replacement,
            } => SubstitutionRule {
                name,
                body: RuleBody::Template {
                    pattern: pattern.iter().map(|p| p.mirrored()).collect(),
                    replacement: replacement.iter().map(|p| p.mirrored()).collect(),
                },
            },
            RuleBody::Decomposition { entangler } => SubstitutionRule {
                name,
                body: RuleBody::Decomposition {
                    entangler: *entangler,
                },
            },
        }
    }
}

/// An ordered collection of verified rules.
#[derive(Debug, Clone)]
pub struct RuleLibrary {
    pub rules: Vec<SubstitutionRule>,
}

impl RuleLibrary {
    pub fn empty() -> RuleLibrary {
        RuleLibrary { rules: Vec::new() }
    }

    /// The bundled library: cz/cz_db re-dressings of cx, the conditional
    /// rotation equivalence, swap realizations for both the three-cx pattern
    /// and the literal swap gate, each registered in both orientations.
    pub fn standard() -> RuleLibrary {
        use GateKind::*;
        use Role::{First as A, Second as B};
        let h = |r: Role| PatternGate::one(U, r, vec![FRAC_PI_2, 0.0, PI]);
        let cx = |a: Role, b: Role| PatternGate::two(Cx, a, b, vec![]);

        let mut lib = RuleLibrary { rules: Vec::new() };
        let mut add = |name: &str, pattern: Vec<PatternGate>, replacement: Vec<PatternGate>| {
            let rule = SubstitutionRule::template(name, pattern, replacement)
                .expect("bundled rules verify");
            let mirror = rule.mirrored(format!("{name}_rev"));
            mirror.verify().expect("bundled mirrors verify");
            lib.rules.push(rule);
            lib.rules.push(mirror);
        };

        add(
            "cx_to_cz",
            vec![cx(A, B)],
            vec![h(B), PatternGate::two(Cz, A, B, vec![]), h(B)],
        );
        add(
            "cx_to_cz_db",
            vec![cx(A, B)],
            vec![h(B), PatternGate::two(CzDb, A, B, vec![]), h(B)],
        );
        // cx = (phase on control) . crot(pi); the phase fix is u(0, 0, pi/2).
        add(
            "cx_to_crot",
            vec![cx(A, B)],
            vec![
                PatternGate::two(Crot, A, B, vec![PI]),
                PatternGate::one(U, A, vec![0.0, 0.0, FRAC_PI_2]),
            ],
        );
        add(
            "cx3_to_swap_d",
            vec![cx(A, B), cx(B, A), cx(A, B)],
            vec![PatternGate::two(SwapD, A, B, vec![])],
        );
        add(
            "cx3_to_swap_c",
            vec![cx(A, B), cx(B, A), cx(A, B)],
            vec![PatternGate::two(SwapC, A, B, vec![])],
        );
        add(
            "swap_to_swap_d",
            vec![PatternGate::two(Swap, A, B, vec![])],
            vec![PatternGate::two(SwapD, A, B, vec![])],
        );
        add(
            "swap_to_swap_c",
            vec![PatternGate::two(Swap, A, B, vec![])],
            vec![PatternGate::two(SwapC, A, B, vec![])],
        );
        lib
    }

    pub fn with_rules(mut self, extra: Vec<SubstitutionRule>) -> RuleLibrary {
        self.rules.extend(extra);
        self
    }
}

#[derive(Deserialize)]
struct RawRuleGate {
    gate: String,
    qubits: Vec<String>,
    #[serde(default)]
    params: Vec<f64>,
}

#[derive(Deserialize)]
struct RawRule {
    name: String,
    pattern: Vec<RawRuleGate>,
    replacement: Vec<RawRuleGate>,
}

fn raw_gate_to_pattern(raw: &RawRuleGate) -> Result<PatternGate, Error> {
    let kind =
        GateKind::from_name(&raw.gate).ok_or_else(|| Error::UnknownGate(raw.gate.clone()))?;
    let mut roles = Vec::new();
    for q in &raw.qubits {
        roles.push(match q.as_str() {
            "a" | "A" => Role::First,
            "b" | "B" => Role::Second,
            other => {
                return Err(Error::InvalidRule(format!(
                    "qubit placeholder `{other}` must be `a` or `b`"
                )))
            }
        });
    }
    Ok(PatternGate {
        kind,
        roles,
        params: raw.params.clone(),
    })
}

/// Load user rules from JSON; every rule must pass unitary verification.
pub fn load_rules(json: &str) -> Result<Vec<SubstitutionRule>, Error> {
    let raw: Vec<RawRule> = serde_json::from_str(json)?;
    let mut out = Vec::new();
    for r in raw {
        let pattern: Result<Vec<PatternGate>, Error> =
            r.pattern.iter().map(raw_gate_to_pattern).collect();
        let replacement: Result<Vec<PatternGate>, Error> =
            r.replacement.iter().map(raw_gate_to_pattern).collect();
        out.push(SubstitutionRule::template(&r.name, pattern?, replacement?)?);
    }
    Ok(out)
}

/// One applicable substitution: replace gates `substituted` (p_s) of block
/// `block_id` by `replacement` (g_s), changing the block's duration and log
/// fidelity by the recorded deltas.
#[derive(Debug, Clone)]
pub struct SubstitutionMatch {
    pub id: usize,
    pub block_id: usize,
    pub substituted: Vec<usize>,
    pub replacement: Vec<Gate>,
    pub delta_duration_ns: f64,
    pub delta_log_fidelity: f64,
    pub rule: String,
}

/// Duration/log-fidelity change of substituting `substituted_source` (a
/// contiguous source segment) by `replacement`: the cost of the replacement
/// minus the cost of the segment's reference translation.
pub fn substitution_deltas(
    replacement: &[Gate],
    substituted_source: &[Gate],
    cm: &CostModel,
    target: &GateSet,
) -> Result<(f64, f64), Error> {
    let reference = basis_translate(substituted_source, target)?;
    let (d_ref, f_ref) = block_cost(&reference, cm)?;
    let (d_new, f_new) = block_cost(replacement, cm)?;
    Ok((d_new - d_ref, f_new - f_ref))
}

/// Entanglers the decomposition rule may target under this gate set.
pub fn default_entanglers(target: &GateSet) -> Vec<GateKind> {
    [GateKind::Cz, GateKind::CzDb]
        .into_iter()
        .filter(|k| target.contains(*k))
        .collect()
}

/// Evaluate the rule library on a preprocessed circuit: every contiguous
/// occurrence of every template inside a block, plus one decomposition match
/// per (two-qubit block, entangler) substituting the whole block.
pub fn enumerate_matches(
    c: &Circuit,
    pre: &Preprocessed,
    cm: &CostModel,
    target: &GateSet,
    lib: &RuleLibrary,
    entanglers: &[GateKind],
) -> Result<Vec<SubstitutionMatch>, Error> {
    let mut out: Vec<SubstitutionMatch> = Vec::new();
    for block in &pre.blocks {
        let Some(pair) = block.qubits.pair() else {
            continue;
        };
        let gates: Vec<Gate> = block.gate_uids.iter().map(|&u| c.gate(u).clone()).collect();

        for rule in &lib.rules {
            let RuleBody::Template {
                pattern,
                replacement,
            } = &rule.body
            else {
                continue;
            };
            if replacement.iter().any(|p| !target.contains(p.kind)) {
                continue;
            }
            let plen = pattern.len();
            if plen > gates.len() {
                continue;
            }
            for start in 0..=(gates.len() - plen) {
                let window = &gates[start..start + plen];
                if !pattern.iter().zip(window).all(|(p, g)| p.matches(g, pair)) {
                    continue;
                }
                let rep: Result<Vec<Gate>, Error> =
                    replacement.iter().map(|p| p.instantiate(pair)).collect();
                let rep = rep?;
                let (dd, df) = substitution_deltas(&rep, window, cm, target)?;
                out.push(SubstitutionMatch {
                    id: out.len(),
                    block_id: block.id,
                    substituted: block.gate_uids[start..start + plen].to_vec(),
                    replacement: rep,
                    delta_duration_ns: dd,
                    delta_log_fidelity: df,
                    rule: rule.name.clone(),
                });
            }
        }

        for &entangler in entanglers {
            if !target.contains(entangler) {
                continue;
            }
            let unitary = block_unitary(&gates, pair)?;
            let rep = kak_decompose(&unitary, entangler, pair)?;
            let (dd, df) = substitution_deltas(&rep, &gates, cm, target)?;
            out.push(SubstitutionMatch {
                id: out.len(),
                block_id: block.id,
                substituted: block.gate_uids.clone(),
                replacement: rep,
                delta_duration_ns: dd,
                delta_log_fidelity: df,
                rule: format!("kak_{}", entangler.name()),
            });
        }
    }
    Ok(out)
}

/// Unordered pairs of match ids whose substituted gate sets intersect.
pub fn conflict_pairs(matches: &[SubstitutionMatch]) -> BTreeSet<(usize, usize)> {
    let sets: Vec<BTreeSet<usize>> = matches
        .iter()
        .map(|m| m.substituted.iter().copied().collect())
        .collect();
    let mut out = BTreeSet::new();
    for i in 0..matches.len() {
        for j in (i + 1)..matches.len() {
            if !sets[i].is_disjoint(&sets[j]) {
                out.insert((
                    matches[i].id.min(matches[j].id),
                    matches[i].id.max(matches[j].id),
                ));
            }
        }
    }
    out
}
