//! One function per subcommand. Each returns a [`Report`]; failures that
//! stop a command early come back as [`CliError`].

use exkit_core::conditional::{
    joint_alphabet, marginal_is_extreme, markov_marginal_counterexample, verify_conditional_reduction,
    verify_conditional_reduction_from, ConditionalCertificate, ConditionalVerdict,
};
use exkit_core::games::{
    assemble, best_response, definetti_upper_bound, enumeration_plan, symmetrize_strategy, table_at,
    winning_probability, DeterministicStrategy, Game, RepeatedGame, Repetition, Strategy,
};
use exkit_core::graphs::transition_graph;
use exkit_core::interval::Interval;
use exkit_core::mp::{beta_bound, cone_comparison, lambda_matrix, mp_point_value, ConeRoute};
use exkit_core::reduction::{alpha_analytic, alpha_tight, empirical_pi, verify_flexible_reduction, ReductionCertificate};
use exkit_core::relations::{best_breakdown, class_members, class_size, enumerate_types, representative, type_of};
use exkit_core::{Alphabet, ConditionalDistribution, Error, FiniteDistribution, Rational, Relation, TypeDescriptor, Word};
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::formats::{self, descriptor, interval, rational, verdict, word_text, ConditionalFile, DistributionFile};
use crate::{cell, CliError, Report, Settings, Status, Table};

fn type_cell(d: &TypeDescriptor) -> String {
    descriptor(d).to_string()
}

/// The class table of a relation on `V^n`, optionally restricted to the class
/// of one word.
pub fn classes(
    relation: &Relation,
    alphabet: &Alphabet,
    n: usize,
    filter: Option<&Word>,
    s: &Settings,
) -> Result<Report, CliError> {
    let index = enumerate_types(relation, alphabet, n)?;
    if index.len() as u64 > s.cap {
        return Err(Error::CapExceeded { what: "class table", cap: s.cap }.into());
    }
    let wanted = filter.map(|w| type_of(w, relation, alphabet)).transpose()?;
    let selected: Vec<_> =
        index.classes.iter().filter(|c| wanted.as_ref().map_or(true, |t| &c.descriptor == t)).collect();
    let rows = selected
        .par_iter()
        .map(|c| -> Result<Value, CliError> {
            let tight = alpha_tight(&c.descriptor, n)?;
            let pi = empirical_pi(&c.descriptor, n)?;
            Ok(json!({
                "type": descriptor(&c.descriptor),
                "size": c.size.to_string(),
                "representative": word_text(&representative(&c.descriptor, n)?),
                "alpha_tight": rational(&tight),
                "pi": formats::empirical(&pi),
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["type", "size", "representative", "alpha_tight", "pi"]);
    for r in &rows {
        table.rows.push(["type", "size", "representative", "alpha_tight", "pi"].iter().map(|k| cell(&r[k])).collect());
    }
    let json = json!({
        "relation": relation.name(),
        "d": alphabet.size(),
        "factors": alphabet.factors(),
        "n": n,
        "class_count": index.len(),
        "total": index.total().to_string(),
        "filter": filter.map(word_text),
        "classes": rows,
    });
    Ok(Report { json, table: Some(table), status: Status::Ok })
}

/// Size of one class with the term-by-term BEST evaluation for Markov types.
pub fn size(t: &TypeDescriptor, n: usize, members: bool, s: &Settings) -> Result<Report, CliError> {
    t.check_consistent(n)?;
    let size = class_size(t, n)?;
    let mut json = json!({
        "type": descriptor(t),
        "n": n,
        "size": size.to_string(),
        "nonempty": !size.is_zero(),
    });
    if !size.is_zero() {
        json["representative"] = word_text(&representative(t, n)?).into();
        json["alpha_tight"] = rational(&alpha_tight(t, n)?);
    }
    if matches!(t, TypeDescriptor::Markov { .. } | TypeDescriptor::LMarkov { .. }) && !size.is_zero() {
        let tg = transition_graph(t, n)?;
        json["graph"] = formats::multigraph(&tg.graph);
        json["start"] = (tg.start + 1).into();
        json["end"] = (tg.end + 1).into();
    }
    if let (TypeDescriptor::Markov { .. }, false) = (t, size.is_zero()) {
        json["best"] = match best_breakdown(t, n)? {
            Some(b) => json!({
                "end": b.end + 1,
                "t_end": b.t_end,
                "arborescences": b.arborescences.to_string(),
                "factorial_product": b.factorial_product.to_string(),
                "multiplicity_product": b.multiplicity_product.to_string(),
                "size": b.size.to_string(),
            }),
            None => Value::Null,
        };
    }
    let mut table = None;
    if members {
        let words = class_members(t, n, s.cap)?;
        json["members"] = words.iter().map(word_text).collect::<Vec<_>>().into();
        let mut tab = Table::new(&["member"]);
        tab.rows = words.iter().map(|w| vec![word_text(w)]).collect();
        table = Some(tab);
    }
    Ok(Report { json, table, status: Status::Ok })
}

fn alpha_json(alpha: &exkit_core::reduction::AlphaBound) -> Value {
    json!({ "value": interval(&alpha.value), "degree": alpha.degree })
}

pub fn reduction_certificate_json(cert: &ReductionCertificate, input: &FiniteDistribution, precision: u32) -> Value {
    let classes: Vec<Value> = cert
        .classes
        .iter()
        .map(|c| {
            json!({
                "type": descriptor(&c.descriptor),
                "representative": word_text(&c.representative),
                "size": c.size.to_string(),
                "weight": rational(&c.weight),
                "value": rational(&c.value),
                "alpha_tight": rational(&c.alpha_tight),
                "fidelity_squared": interval(&c.fidelity_squared),
                "rhs": interval(&c.rhs),
                "verdict": verdict(&c.verdict),
                "analytic_rhs": interval(&c.analytic_rhs),
                "analytic_verdict": verdict(&c.analytic_verdict),
            })
        })
        .collect();
    json!({
        "kind": "reduction",
        "relation": cert.relation.name(),
        "d": cert.alphabet.size(),
        "factors": cert.alphabet.factors(),
        "n": cert.n,
        "precision": precision,
        "bits": cert.bits,
        "verdict": verdict(&cert.verdict),
        "analytic_verdict": verdict(&cert.analytic_verdict),
        "class_count": cert.classes.len(),
        "alpha": alpha_json(&cert.alpha),
        "alpha_tight_max": rational(&cert.alpha_tight_max),
        "analytic_alpha_valid": cert.analytic_alpha_valid,
        "alpha_effective": interval(&cert.alpha_effective),
        "prefactor": interval(&cert.prefactor),
        "analytic_prefactor": interval(&cert.analytic_prefactor),
        "classes": classes,
        "input": DistributionFile::from_distribution(input),
    })
}

fn class_table(classes: &[Value], columns: &[&str]) -> Table {
    let mut table = Table::new(columns);
    for c in classes {
        table.rows.push(
            columns
                .iter()
                .map(|k| match &c[k] {
                    Value::Object(o) if o.contains_key("status") => cell(&o["status"]),
                    Value::Object(o) if o.contains_key("hi") => cell(&o["hi"]),
                    v => cell(v),
                })
                .collect(),
        );
    }
    table
}

/// Flexible reduction certificate for a `~`-exchangeable distribution.
pub fn certify(p: &FiniteDistribution, relation: &Relation, s: &Settings) -> Result<Report, CliError> {
    let cert = verify_flexible_reduction(p, relation, s.precision(), s.cap)?;
    let json = reduction_certificate_json(&cert, p, s.bits);
    let table = class_table(
        json["classes"].as_array().expect("classes"),
        &["type", "representative", "size", "weight", "fidelity_squared", "rhs", "verdict"],
    );
    Ok(Report { status: Status::of(&cert.verdict), json, table: Some(table) })
}

fn conditional_verdict(v: &ConditionalVerdict) -> Value {
    match v {
        ConditionalVerdict::Holds => json!({ "status": "holds" }),
        ConditionalVerdict::Fails { margin } => json!({ "status": "fails", "margin": rational(margin) }),
        ConditionalVerdict::Inconclusive => json!({ "status": "inconclusive" }),
        ConditionalVerdict::Unsupported => json!({ "status": "unsupported" }),
    }
}

pub fn conditional_certificate_json(cert: &ConditionalCertificate, precision: u32) -> Value {
    let classes: Vec<Value> = cert
        .classes
        .iter()
        .map(|c| {
            json!({
                "type": descriptor(&c.descriptor),
                "a": word_text(&c.a),
                "x": word_text(&c.x),
                "conditional": c.conditional.as_ref().map(rational),
                "mixture": rational(&c.mixture),
                "rhs": interval(&c.rhs),
                "verdict": conditional_verdict(&c.verdict),
                "analytic_verdict": conditional_verdict(&c.analytic_verdict),
                "alpha_prime_tight": rational(&c.alpha_prime_tight),
            })
        })
        .collect();
    json!({
        "kind": "conditional_reduction",
        "A": cert.d_a,
        "X": cert.d_x,
        "n": cert.n,
        "precision": precision,
        "bits": cert.bits,
        "verdict": verdict(&cert.verdict),
        "analytic_verdict": verdict(&cert.analytic_verdict),
        "universal": cert.universal,
        "class_count": cert.classes.len(),
        "alpha": alpha_json(&cert.alpha),
        "alpha_tight_max": rational(&cert.alpha_tight_max),
        "alpha_effective": interval(&cert.alpha_effective),
        "alpha_prime": rational(&cert.alpha_prime),
        "alpha_prime_tight_max": rational(&cert.alpha_prime_tight_max),
        "prefactor": interval(&cert.prefactor),
        "analytic_prefactor": interval(&cert.analytic_prefactor),
        "classes": classes,
    })
}

fn conditional_report(cert: &ConditionalCertificate, json: Value) -> Report {
    let table = class_table(
        json["classes"].as_array().expect("classes"),
        &["type", "a", "x", "conditional", "mixture", "rhs", "verdict", "alpha_prime_tight"],
    );
    Report { status: Status::of(&cert.verdict), json, table: Some(table) }
}

/// Conditional reduction for a joint distribution on `(A x X)^n`, the
/// alphabet given as factors `[|A|, |X|]`.
pub fn certify_conditional(p: &FiniteDistribution, s: &Settings) -> Result<Report, CliError> {
    if p.alphabet().factors().map_or(true, |f| f.len() != 2) {
        return Err(CliError::Input("--conditional needs a joint distribution with factors [|A|, |X|]".into()));
    }
    let cert = verify_conditional_reduction(p, s.precision(), s.cap)?;
    let mut json = conditional_certificate_json(&cert, s.bits);
    json["input"] = serde_json::to_value(DistributionFile::from_distribution(p))?;
    Ok(conditional_report(&cert, json))
}

/// Conditional reduction for a conditional file, lifted with uniform inputs.
pub fn conditional(pc: &ConditionalDistribution, s: &Settings) -> Result<Report, CliError> {
    let cert = verify_conditional_reduction_from(pc, s.precision(), s.cap)?;
    let mut json = conditional_certificate_json(&cert, s.bits);
    json["input_conditional"] = serde_json::to_value(ConditionalFile::from_conditional(pc))?;
    Ok(conditional_report(&cert, json))
}

fn first_difference(path: &str, expected: &Value, found: &Value) -> Option<String> {
    match (expected, found) {
        (Value::Object(a), Value::Object(b)) => {
            for key in a.keys().chain(b.keys()) {
                let (x, y) = (a.get(key).unwrap_or(&Value::Null), b.get(key).unwrap_or(&Value::Null));
                if let Some(d) = first_difference(&format!("{path}.{key}"), x, y) {
                    return Some(d);
                }
            }
            None
        }
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => {
            a.iter().zip(b).enumerate().find_map(|(i, (x, y))| first_difference(&format!("{path}[{i}]"), x, y))
        }
        _ => (expected != found).then(|| path.to_string()),
    }
}

/// Re-ingests a certificate, recomputes it from its embedded input at its
/// recorded precision and compares every field.
pub fn verify(cert: &Value, s: &Settings) -> Result<Report, CliError> {
    let field = |k: &str| cert.get(k).ok_or_else(|| CliError::Input(format!("certificate without {k:?}")));
    let precision = field("precision")?
        .as_u64()
        .and_then(|b| u32::try_from(b).ok())
        .ok_or_else(|| CliError::Input("certificate precision".into()))?;
    let s = Settings { bits: precision, ..*s };
    let recomputed = match field("kind")?.as_str() {
        Some("reduction") => {
            let p: DistributionFile = serde_json::from_value(field("input")?.clone())?;
            let relation = crate::parse_relation(field("relation")?.as_str().unwrap_or_default(), None)?;
            certify(&p.to_distribution()?, &relation, &s)?
        }
        Some("conditional_reduction") => match (cert.get("input"), cert.get("input_conditional")) {
            (Some(input), _) => {
                let p: DistributionFile = serde_json::from_value(input.clone())?;
                certify_conditional(&p.to_distribution()?, &s)?
            }
            (None, Some(input)) => {
                let pc: ConditionalFile = serde_json::from_value(input.clone())?;
                conditional(&pc.to_conditional()?, &s)?
            }
            (None, None) => return Err(CliError::Input("certificate without an input".into())),
        },
        _ => return Err(CliError::Input("unknown certificate kind".into())),
    };
    if let Some(path) = first_difference("$", &recomputed.json, cert) {
        return Err(CliError::Input(format!("certificate does not match its recomputation at {path}")));
    }
    for c in cert["classes"].as_array().into_iter().flatten() {
        formats::parse_interval(&c["rhs"])?;
    }
    let json = json!({
        "verified": true,
        "kind": cert["kind"],
        "verdict": recomputed.json["verdict"],
        "class_count": recomputed.json["class_count"],
    });
    Ok(Report { json, table: None, status: recomputed.status })
}

/// `alpha(n)` from the closed formula against the exact tight maximum, for
/// every `n` in a range.
pub fn alpha(relation: &Relation, alphabet: &Alphabet, ns: std::ops::RangeInclusive<usize>, s: &Settings) -> Result<Report, CliError> {
    let columns = ["n", "alpha_lo", "alpha_hi", "degree", "class_count", "alpha_tight_max", "valid", "prefactor_hi"];
    let mut table = Table::new(&columns);
    let mut rows = Vec::new();
    for n in ns {
        let bound = alpha_analytic(relation, alphabet, n, s.bits)?;
        let index = enumerate_types(relation, alphabet, n)?;
        if index.len() as u64 > s.cap {
            return Err(Error::CapExceeded { what: "class table", cap: s.cap }.into());
        }
        let tights = index
            .classes
            .par_iter()
            .map(|c| alpha_tight(&c.descriptor, n))
            .collect::<Result<Vec<_>, _>>()?;
        let tight_max = tights.into_iter().max().unwrap_or_else(Rational::zero);
        let valid = tight_max <= bound.value.lo();
        let prefactor = Interval::from_integer(index.len() as i64, s.bits) * bound.value.square();
        let row = json!({
            "n": n,
            "alpha": interval(&bound.value),
            "degree": bound.degree,
            "class_count": index.len(),
            "alpha_tight_max": rational(&tight_max),
            "valid": valid,
            "prefactor": interval(&prefactor),
        });
        table.rows.push(vec![
            n.to_string(),
            cell(&row["alpha"]["lo"]),
            cell(&row["alpha"]["hi"]),
            bound.degree.to_string(),
            index.len().to_string(),
            cell(&row["alpha_tight_max"]),
            valid.to_string(),
            cell(&row["prefactor"]["hi"]),
        ]);
        rows.push(row);
    }
    let json = json!({ "relation": relation.name(), "d": alphabet.size(), "factors": alphabet.factors(), "rows": rows });
    Ok(Report { json, table: Some(table), status: Status::Ok })
}

/// The lambda matrix of the measure-and-prepare map, or `MP(Q_t)` for one
/// type together with the cone comparison.
pub fn mp(d: usize, n: usize, t: Option<&[u64]>, s: &Settings) -> Result<Report, CliError> {
    let m = lambda_matrix(n, d)?;
    if (m.types.len() as u64).saturating_mul(m.types.len() as u64) > s.cap {
        return Err(Error::CapExceeded { what: "lambda matrix", cap: s.cap }.into());
    }
    let counts = |v: &[u64]| json!(v);
    match t {
        None => {
            let mut table = Table::new(&["s", "t", "lambda"]);
            for (i, si) in m.types.iter().enumerate() {
                for (j, tj) in m.types.iter().enumerate() {
                    table.rows.push(vec![counts(si).to_string(), counts(tj).to_string(), cell(&rational(&m.entries[i][j]))]);
                }
            }
            let json = json!({
                "d": d,
                "n": n,
                "types": m.types,
                "lambda": m.entries.iter().map(|r| r.iter().map(rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "symmetric": m.is_symmetric(),
                "doubly_stochastic": m.is_doubly_stochastic(),
            });
            Ok(Report { json, table: Some(table), status: Status::Ok })
        }
        Some(t) => {
            if t.len() != d || t.iter().sum::<u64>() as usize != n {
                return Err(CliError::Input(format!("type {t:?} is not a composition of {n} into {d} parts")));
            }
            let j = m.position(t).expect("every composition is a type");
            let mut table = Table::new(&["s", "mp_value", "lambda_st"]);
            let mut values = Vec::new();
            let mut total = Rational::zero();
            for (i, si) in m.types.iter().enumerate() {
                let v = mp_point_value(t, si);
                let members = exkit_core::combinatorics::multinomial(si);
                total += &v * exkit_core::rational::from_biguint(&members);
                table.rows.push(vec![counts(si).to_string(), cell(&rational(&v)), cell(&rational(&m.entries[i][j]))]);
                values.push(json!({ "s": si, "value": rational(&v), "lambda_st": rational(&m.entries[i][j]) }));
            }
            let cone = cone_comparison(t, s.bits)?;
            let smaller = match cone.smaller {
                ConeRoute::MeasureAndPrepare => "measure_and_prepare",
                ConeRoute::Alpha => "alpha",
                ConeRoute::Undecided => "undecided",
            };
            let json = json!({
                "d": d,
                "n": n,
                "t": t,
                "values": values,
                "total_mass": rational(&total),
                "cone": {
                    "lambda_inverse": rational(&cone.lambda_inverse),
                    "alpha_tight": rational(&cone.alpha_tight),
                    "alpha_analytic": interval(&cone.alpha_analytic),
                    "smaller": smaller,
                },
            });
            Ok(Report { json, table: Some(table), status: Status::Ok })
        }
    }
}

/// `beta(n)` exactly and by the flat-type formula.
pub fn beta(d: usize, ns: std::ops::RangeInclusive<usize>, s: &Settings) -> Result<Report, CliError> {
    let mut table = Table::new(&["n", "exact", "analytic_lo", "analytic_hi", "within", "maximizers"]);
    let mut rows = Vec::new();
    for n in ns {
        let b = beta_bound(n, d, s.bits)?;
        let within = b.analytic.as_ref().map(|a| b.exact <= a.lo());
        let row = json!({
            "n": n,
            "exact": rational(&b.exact),
            "maximizers": b.maximizers,
            "analytic": b.analytic.as_ref().map(interval),
            "within": within,
        });
        table.rows.push(vec![
            n.to_string(),
            cell(&row["exact"]),
            cell(&row["analytic"]["lo"]),
            cell(&row["analytic"]["hi"]),
            within.map_or(String::new(), |w| w.to_string()),
            row["maximizers"].to_string(),
        ]);
        rows.push(row);
    }
    Ok(Report { json: json!({ "d": d, "rows": rows }), table: Some(table), status: Status::Ok })
}

/// The Markov counterexample plus an exhaustive check that exchangeable
/// marginals of extremes are extremes for `|A|, |X| <= 2`, `n <= max_n`.
pub fn counterexample(max_n: usize, s: &Settings) -> Result<Report, CliError> {
    let report = markov_marginal_counterexample(s.cap)?;
    let joint_ab = joint_alphabet(2, 2)?;
    let part = |i| report.joint.project(&joint_ab, i).map(|w| word_text(&w));
    let mut table = Table::new(&["A", "X", "n", "classes", "extreme_marginals"]);
    let mut sweep = Vec::new();
    let mut all_extreme = true;
    for d_a in 1..=2 {
        for d_x in 1..=2 {
            for n in 1..=max_n {
                let index = enumerate_types(&Relation::Exchangeable, &Alphabet::new(d_a * d_x)?, n)?;
                let extreme = index
                    .classes
                    .par_iter()
                    .map(|c| marginal_is_extreme(&c.descriptor, d_a, d_x, n, s.cap))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .filter(|&e| e)
                    .count();
                all_extreme &= extreme == index.len();
                table.rows.push(vec![
                    d_a.to_string(),
                    d_x.to_string(),
                    n.to_string(),
                    index.len().to_string(),
                    extreme.to_string(),
                ]);
                sweep.push(json!({ "A": d_a, "X": d_x, "n": n, "classes": index.len(), "extreme_marginals": extreme }));
            }
        }
    }
    let json = json!({
        "joint": { "a": part(0)?, "x": part(1)? },
        "joint_class_size": report.joint_class_size.to_string(),
        "marginal": word_text(&report.marginal),
        "partner": word_text(&report.partner),
        "markov_class": report.markov_class.iter().map(word_text).collect::<Vec<_>>(),
        "masses": [rational(&report.masses.0), rational(&report.masses.1)],
        "marginal_is_markov_exchangeable": report.marginal_is_markov_exchangeable,
        "exchangeable_marginal_is_extreme": report.exchangeable_marginal_is_extreme,
        "exchangeable_sweep": sweep,
    });
    let status = if all_extreme { Status::Ok } else { Status::Fails };
    Ok(Report { json, table: Some(table), status })
}

/// Classical value by enumerating one player's tables in parallel; ties go
/// to the lowest table index, so the witness does not depend on scheduling.
pub fn classical_value_parallel(game: &Game, cap: u64) -> Result<(Rational, DeterministicStrategy), CliError> {
    let (swapped, count) = enumeration_plan(game);
    let count = count.filter(|&c| c <= cap).ok_or(Error::CapExceeded { what: "deterministic strategies", cap })?;
    let (answers, len) = if swapped { (game.b, game.y) } else { (game.a, game.x) };
    let (value, index) = (0..count)
        .into_par_iter()
        .map(|i| (best_response(game, &table_at(i, answers, len), swapped).0, i))
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("at least one table");
    let table = table_at(index, answers, len);
    let (_, response) = best_response(game, &table, swapped);
    Ok((value, assemble(swapped, table, response)))
}

fn one_indexed(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

/// Values of a game and its repetition, and the de Finetti bound for a
/// supplied strategy or the symmetrized tensor power of an optimal one.
pub fn game(
    base: &Game,
    n: usize,
    repetition: Repetition,
    strategy: Option<Strategy>,
    emit_strategy: bool,
    s: &Settings,
) -> Result<Report, CliError> {
    let (value, best) = classical_value_parallel(base, s.cap)?;
    let mode = match repetition {
        Repetition::Parallel => "parallel",
        Repetition::Sequential(_) => "sequential",
    };
    let rg = RepeatedGame::new(base, n, repetition, s.cap)?;
    let repeated = match enumeration_plan(&rg.game).1 {
        Some(c) if c <= s.cap => Some(classical_value_parallel(&rg.game, s.cap)?.0),
        _ => None,
    };
    let supplied = strategy.is_some();
    let strategy = match strategy {
        Some(st) => st,
        None => best.to_strategy(base)?.tensor_power(n)?,
    };
    let strategy_value = winning_probability(&rg.game, &strategy)?;
    let relation = rg.relation();
    let sym = symmetrize_strategy(&rg, &strategy, &relation, s.cap)?;
    let bound = definetti_upper_bound(&rg, &sym.strategy, s.precision(), s.cap)?;
    let status = if bound.achieved <= bound.bound.lo() {
        Status::Ok
    } else if bound.achieved > bound.bound.hi() {
        Status::Fails
    } else {
        Status::Inconclusive
    };
    let mut table = Table::new(&["type", "fidelity_squared_hi", "win"]);
    let terms: Vec<Value> = bound
        .terms
        .iter()
        .map(|t| {
            let fid = interval(&t.fidelity_squared);
            table.rows.push(vec![type_cell(&t.descriptor), cell(&fid["hi"]), cell(&rational(&t.win))]);
            json!({ "type": descriptor(&t.descriptor), "fidelity_squared": fid, "win": rational(&t.win) })
        })
        .collect();
    let power = num_traits::pow(value.clone(), n);
    let mut json = json!({
        "mode": mode,
        "n": n,
        "classical_value": rational(&value),
        "optimal_strategy": { "alice": one_indexed(&best.alice), "bob": one_indexed(&best.bob) },
        "value_power": rational(&power),
        "repeated_value": repeated.as_ref().map(rational),
        "relation": relation.name(),
        "strategy_source": if supplied { "supplied" } else { "optimal_tensor_power" },
        "strategy_value": rational(&strategy_value),
        "achieved": rational(&bound.achieved),
        "marginal_preserved": sym.marginal_preserved,
        "d": bound.d,
        "class_count": bound.classes,
        "degree": bound.degree,
        "alpha": interval(&bound.alpha),
        "alpha_tight_max": rational(&bound.alpha_tight_max),
        "prefactor": interval(&bound.prefactor),
        "analytic_prefactor": interval(&bound.analytic_prefactor),
        "bound": interval(&bound.bound),
        "analytic_bound": interval(&bound.analytic_bound),
        "certified": status == Status::Ok,
        "terms": terms,
    });
    if emit_strategy {
        json["symmetrized_strategy"] = formats::strategy(base, n, &sym.strategy);
    }
    Ok(Report { json, table: Some(table), status })
}
