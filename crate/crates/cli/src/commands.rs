use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use sepax::amd::{self, GenerateOptions};
use sepax::axioms::{all_violations, first_violation};
use sepax::lottery::canonical_utility;
use sepax::lp::{solve_lp, LpStatus};
use sepax::mechanism::{load_mechanism, zoo, ZOO};
use sepax::paths::{check_multi_separation_sp, multi_separation_path};
use sepax::verify::{
    check_corollary1, check_remark2, check_sp_bruteforce, check_theorem1, count_constraints,
    EquivalenceReport,
};
use sepax::{Axiom, Certificate, Domain, MechanismTable, Rat, UtilityFn, WeakOrder};

use crate::report::{
    read_text, write_all_atomic, write_atomic, CliError, RunReport, EXIT_DISAGREEMENT, EXIT_PASS,
    EXIT_VIOLATION,
};

/// Largest problem size accepted by `amd`.
pub const MAX_AMD_M: usize = 4;

const AXIOMS: [Axiom; 4] = [
    Axiom::Responsive,
    Axiom::Direct,
    Axiom::UpperInvariant,
    Axiom::LowerInvariant,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Axioms,
    Sp,
    Theorem1,
    Corollary1,
    Remark2,
    Multisep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum What {
    Orders,
    Separations,
    Counts,
}

#[derive(Debug, Clone)]
pub enum MechanismSource {
    File(PathBuf),
    Zoo { name: String, m: usize },
}

impl MechanismSource {
    fn describe(&self) -> Value {
        match self {
            MechanismSource::File(p) => json!({ "file": p.display().to_string() }),
            MechanismSource::Zoo { name, m } => json!({ "zoo": name, "m": m }),
        }
    }

    fn id(&self) -> String {
        match self {
            MechanismSource::File(p) => p.display().to_string(),
            MechanismSource::Zoo { name, m } => format!("{name}@m={m}"),
        }
    }

    fn load(&self) -> Result<MechanismTable, CliError> {
        match self {
            MechanismSource::File(p) => Ok(load_mechanism(p)?),
            MechanismSource::Zoo { name, m } => {
                let domain = Domain::new(*m)?;
                zoo(name, &domain).ok_or_else(|| unknown_zoo(name))
            }
        }
    }
}

fn unknown_zoo(name: &str) -> CliError {
    CliError::Usage(format!("unknown zoo mechanism {name:?}; known: {}", ZOO.join(", ")))
}

fn report(command: &str, inputs: Value, seed: Option<u64>, result: Value, counts: Value, exit: i32) -> RunReport {
    RunReport {
        command: command.to_string(),
        inputs,
        seed,
        result,
        counts,
        elapsed_ms: 0,
        exit,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// JSON number when it fits, decimal string otherwise.
fn big(n: u128) -> Value {
    u64::try_from(n).map_or_else(|_| Value::String(n.to_string()), Value::from)
}

fn all_certificates(mech: &MechanismTable) -> Vec<Certificate> {
    AXIOMS.iter().flat_map(|&a| all_violations(mech, a)).collect()
}

fn equivalence_exit(r: &EquivalenceReport) -> i32 {
    if !r.agreement {
        EXIT_DISAGREEMENT
    } else if r.sp_verdict {
        EXIT_PASS
    } else {
        EXIT_VIOLATION
    }
}

pub fn check(source: &MechanismSource, mode: Mode, emit_all: bool) -> Result<RunReport, CliError> {
    let mech = source.load()?;
    let id = source.id();
    let domain = mech.domain();
    let inputs = json!({
        "mechanism": source.describe(),
        "m": mech.m(),
        "mode": mode,
        "emit_all_certificates": emit_all,
    });
    let mut counts = json!({
        "orders": domain.len(),
        "separations": domain.separations().len(),
    });
    let (result, exit) = match mode {
        Mode::Axioms => {
            let firsts: Vec<(Axiom, Option<Certificate>)> = AXIOMS
                .iter()
                .map(|&a| (a, first_violation(&mech, &[a]).into_witness()))
                .collect();
            let mut verdicts = serde_json::Map::new();
            for (a, w) in &firsts {
                verdicts.insert(a.name().to_string(), Value::Bool(w.is_none()));
            }
            let monotonic = firsts[0].1.is_none() && firsts[1].1.is_none();
            verdicts.insert("monotonic".into(), Value::Bool(monotonic));
            let pass = firsts.iter().all(|(_, w)| w.is_none());
            let certificates = if emit_all {
                all_certificates(&mech)
            } else {
                firsts.into_iter().filter_map(|(_, w)| w).collect()
            };
            counts["certificates"] = json!(certificates.len());
            let result = json!({
                "mechanism": id,
                "pass": pass,
                "verdicts": verdicts,
                "certificates": certificates,
            });
            (result, if pass { EXIT_PASS } else { EXIT_VIOLATION })
        }
        Mode::Sp => {
            let violation = check_sp_bruteforce(&mech).into_witness();
            counts["ordered_pairs"] = json!(domain.len() * domain.len().saturating_sub(1));
            let pass = violation.is_none();
            let result = json!({ "mechanism": id, "strategyproof": pass, "violation": violation });
            (result, if pass { EXIT_PASS } else { EXIT_VIOLATION })
        }
        Mode::Theorem1 | Mode::Remark2 | Mode::Corollary1 => {
            let mut r = match mode {
                Mode::Theorem1 => check_theorem1(&mech, &id),
                Mode::Remark2 => check_remark2(&mech, &id),
                _ => check_corollary1(&mech, &id)?,
            };
            if emit_all {
                r.certificates = all_certificates(&mech);
            }
            counts["certificates"] = json!(r.certificates.len());
            (to_value(&r), equivalence_exit(&r))
        }
        Mode::Multisep => {
            let violation = check_multi_separation_sp(&mech).into_witness();
            let pass = violation.is_none();
            let result = json!({
                "mechanism": id,
                "multi_separation_strategyproof": pass,
                "violation": violation,
            });
            (result, if pass { EXIT_PASS } else { EXIT_VIOLATION })
        }
    };
    Ok(report("check", inputs, None, result, counts, exit))
}

pub fn enumerate(m: usize, what: What) -> Result<RunReport, CliError> {
    let inputs = json!({ "m": m, "what": what });
    let (result, counts) = match what {
        What::Counts => {
            let c = count_constraints(m)?;
            let result = json!({
                "m": c.m,
                "fubini": big(c.fubini),
                "ordered_pairs": big(c.ordered_pairs),
                "separations_total": big(c.separations_total),
                "separations_max_per_order": big(c.separations_max_per_order),
            });
            (result.clone(), result)
        }
        What::Orders => {
            let domain = Domain::new(m)?;
            let orders: Vec<String> = domain.orders().iter().map(ToString::to_string).collect();
            (json!({ "orders": orders }), json!({ "orders": domain.len() }))
        }
        What::Separations => {
            let domain = Domain::new(m)?;
            let seps: Vec<Value> = domain
                .separations()
                .iter()
                .map(|s| {
                    json!({
                        "coarse": domain.order(s.coarse).to_string(),
                        "fine": domain.order(s.fine).to_string(),
                        "kappa": s.class + 1,
                        "M1": s.upper,
                        "M2": s.lower,
                    })
                })
                .collect();
            let counts = json!({ "orders": domain.len(), "separations": seps.len() });
            (json!({ "separations": seps }), counts)
        }
    };
    Ok(report("enumerate", inputs, None, result, counts, EXIT_PASS))
}

fn load_utility(path: &Path, m: usize) -> Result<UtilityFn, CliError> {
    let fail = |reason: String| CliError::Utility {
        path: path.display().to_string(),
        reason,
    };
    let raw: Vec<String> = serde_json::from_str(&read_text(path)?).map_err(|e| fail(e.to_string()))?;
    if raw.len() != m {
        return Err(fail(format!("{} values for m={m}", raw.len())));
    }
    let values = raw
        .iter()
        .map(|t| t.parse::<Rat>().map_err(|_| fail(format!("malformed rational {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    UtilityFn::new(values).map_err(|e| fail(e.to_string()))
}

/// Canonical utility plus an independent shift in `[-5/12, 5/12]` per class.
pub fn jittered_utility<R: Rng>(order: &WeakOrder, rng: &mut R) -> UtilityFn {
    let base = canonical_utility(order);
    let shifts: Vec<Rat> = (0..order.num_classes())
        .map(|_| Rat::new(rng.gen_range(-5..=5), 12))
        .collect();
    let values = (0..order.m())
        .map(|a| &base.values()[a] + &shifts[order.class_of(sepax::Alt(a))])
        .collect();
    UtilityFn::new(values).expect("shifts keep utilities positive")
}

pub fn path(
    from: &str,
    to: &str,
    utility_a: Option<&Path>,
    utility_b: Option<&Path>,
    seed: Option<u64>,
) -> Result<RunReport, CliError> {
    let a: WeakOrder = from.parse()?;
    let b = WeakOrder::parse_with_m(to, a.m())?;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut pick = |order: &WeakOrder, file: Option<&Path>| -> Result<UtilityFn, CliError> {
        match (file, rng.as_mut()) {
            (Some(p), _) => load_utility(p, order.m()),
            (None, Some(r)) => Ok(jittered_utility(order, r)),
            (None, None) => Ok(canonical_utility(order)),
        }
    };
    let u = pick(&a, utility_a)?;
    let up = pick(&b, utility_b)?;
    let inputs = json!({
        "from": a,
        "to": b,
        "utility_from": u.values(),
        "utility_to": up.values(),
    });
    let path = multi_separation_path(&a, &b, &u, &up)?;
    let counts = json!({ "orders": path.orders.len(), "steps": path.steps.len() });
    Ok(report("path", inputs, seed, to_value(&path), counts, EXIT_PASS))
}

#[derive(Debug, Clone)]
pub enum ObjectiveSource {
    TopClass,
    File(PathBuf),
}

impl ObjectiveSource {
    pub fn parse(text: &str) -> ObjectiveSource {
        match text {
            "top-class" => ObjectiveSource::TopClass,
            _ => ObjectiveSource::File(PathBuf::from(text)),
        }
    }
}

pub struct AmdArgs<'a> {
    pub m: usize,
    pub objective: &'a ObjectiveSource,
    pub out: &'a Path,
    pub solution_out: Option<&'a Path>,
    pub lp_out: Option<&'a Path>,
    pub lower_responsiveness: bool,
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

pub fn amd(args: AmdArgs<'_>) -> Result<RunReport, CliError> {
    if args.m == 0 || args.m > MAX_AMD_M {
        return Err(CliError::Usage(format!("amd supports 1 <= m <= {MAX_AMD_M}, got {}", args.m)));
    }
    let domain: Arc<Domain> = Domain::new(args.m)?;
    let objective = match args.objective {
        ObjectiveSource::TopClass => amd::top_class_objective(&domain),
        ObjectiveSource::File(p) => amd::load_objective(p, &domain)?,
    };
    let opts = GenerateOptions {
        lower_responsiveness: args.lower_responsiveness,
    };
    let (mut lp, summary) = amd::sp_program(&domain, opts);
    lp.set_objective(objective);
    let sol = solve_lp(&lp);
    let solution_path = args
        .solution_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sibling(args.out, ".solution.json"));

    let mut files = vec![(
        solution_path.as_path(),
        serde_json::to_string_pretty(&amd::solution_json(&lp, &sol)).expect("json") + "\n",
    )];
    if let Some(p) = args.lp_out {
        let text = if p.extension().is_some_and(|e| e == "json") {
            serde_json::to_string_pretty(&lp).expect("json") + "\n"
        } else {
            lp.to_text()
        };
        files.push((p, text));
    }
    let mut sp = Value::Null;
    let mut exit = EXIT_VIOLATION;
    if sol.status == LpStatus::Optimal {
        let mech = amd::solution_to_mechanism(&sol, &domain)?;
        let violation = check_sp_bruteforce(&mech).into_witness();
        if violation.is_none() {
            exit = EXIT_PASS;
        }
        sp = json!({ "strategyproof": violation.is_none(), "violation": violation });
        files.push((args.out, mech.to_json()));
    }
    write_all_atomic(&files)?;

    let objective_name = match args.objective {
        ObjectiveSource::TopClass => "top-class".to_string(),
        ObjectiveSource::File(p) => p.display().to_string(),
    };
    let inputs = json!({
        "m": args.m,
        "objective": objective_name,
        "lower_responsiveness": args.lower_responsiveness,
    });
    let result = json!({
        "status": sol.status,
        "objective": sol.objective,
        "mechanism_file": (sol.status == LpStatus::Optimal).then(|| args.out.display().to_string()),
        "solution_file": solution_path.display().to_string(),
        "sp_check": sp,
    });
    let counts = to_value(&summary);
    Ok(report("amd", inputs, None, result, counts, exit))
}

pub fn zoo_list() -> RunReport {
    report(
        "zoo",
        json!({ "action": "list" }),
        None,
        json!({ "names": ZOO }),
        json!({ "names": ZOO.len() }),
        EXIT_PASS,
    )
}

pub fn zoo_emit(name: &str, m: usize, out: &Path) -> Result<RunReport, CliError> {
    let domain = Domain::new(m)?;
    let mech = zoo(name, &domain).ok_or_else(|| unknown_zoo(name))?;
    write_atomic(out, &mech.to_json())?;
    Ok(report(
        "zoo",
        json!({ "action": "emit", "name": name, "m": m, "out": out.display().to_string() }),
        None,
        json!({ "file": out.display().to_string() }),
        json!({ "entries": domain.len() }),
        EXIT_PASS,
    ))
}
