//! Command-line front end: parse subgroup inputs, dispatch to the
//! library, and emit text (ending in a single verdict line), JSON, and
//! DOT. Exit codes: 0 for any computed verdict (including negative and
//! exhausted ones), 2 for usage errors, 3 for budget errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};

use protop::abelian::{self, AbelianTopology, ClosureDescriptor};
use protop::automata::{
    enumerate_index_subgroups, schreier_ball, AutomatonError, EnumBudget, OvergroupBudget,
    StallingsAutomaton, SubgroupIndex,
};
use protop::intlin::{self, IntMatrix};
use protop::metabelian::{
    self, BigIndex, Budget, Certificate, MetaVerdict, PaperClosureReport, ValidatedReport,
    ValidationStatus,
};
use protop::pv::{self, DenseOutcome, DensityQuery, PvError};
use protop::quotients::{
    parse_cycles, permutation_from_cycles, FiniteQuotient, PseudovarietyDescriptor,
    QuotientError,
};
use protop::words::Word;

#[derive(Parser)]
#[command(
    name = "protop",
    version,
    about = "Exact closures, closedness and density of finitely generated subgroups of \
             free groups for pro-abelian, bounded-exponent, metabelian and solvable \
             topologies"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SubgroupArgs {
    /// Ambient free group rank (used with --gens)
    #[arg(long)]
    rank: Option<usize>,
    /// Comma-separated generator words, e.g. "aa,b" ("1" is the identity)
    #[arg(long)]
    gens: Option<String>,
    /// Define the subgroup as a preimage under a map to a permutation
    /// group, e.g. "a=(1 2);b=(1 2 3)"
    #[arg(long = "gens-from-quotient")]
    gens_from_quotient: Option<String>,
    /// Generators of the subgroup of the quotient to pull back,
    /// semicolon-separated cycle permutations, e.g. "(1 2)"
    #[arg(long)]
    preimage: Option<String>,
}

#[derive(Args)]
struct OutputArgs {
    /// Append a JSON report after the text output
    #[arg(long)]
    json: bool,
    /// Write the automaton-valued result as DOT to this file
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Maximum length of subgroup-side products in the metabelian search
    #[arg(long = "budget-len", default_value_t = 12)]
    budget_len: usize,
    /// Maximum index of separating subgroups in the metabelian search
    #[arg(long = "budget-index", default_value_t = 7)]
    budget_index: usize,
    /// Cap on the total number of subgroup-side products tested
    #[arg(long = "budget-products", default_value_t = 2_000_000)]
    budget_products: u64,
}

impl BudgetArgs {
    fn to_budget(&self, deadline: Option<Instant>) -> Budget {
        Budget {
            max_len: self.budget_len,
            max_index: self.budget_index,
            max_products: self.budget_products,
            deadline,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Fold the generators into the subgroup's automaton
    Stallings {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Membership of a word in the subgroup or in a closure
    Member {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        /// The query word
        #[arg(long)]
        word: String,
        /// Closure to test instead of the subgroup itself: ab, ab:m,
        /// meta (sk:1 and sk:2 are aliases of ab and meta)
        #[arg(long)]
        pv: Option<String>,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Free basis of the subgroup
    Basis {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Index of the subgroup in the ambient free group
    Index {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Intersection of two subgroups given by generators
    Intersect {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        gens: String,
        #[arg(long)]
        gens2: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Core (largest normal subgroup inside) of a finite-index subgroup
    Core {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// All overgroups (folded quotients) of the subgroup
    Overgroups {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        /// Refuse automata larger than this
        #[arg(long, default_value_t = 12)]
        max_vertices: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// All subgroups of the given index, up to based isomorphism
    SubgroupsOfIndex {
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        index: usize,
        /// Print every automaton, not just the count
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Radius-bounded Schreier ball and basis chunk of the subgroup
    SchreierBasis {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[arg(long)]
        radius: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closure of the subgroup: ab, ab:m, or meta
    Closure {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[arg(long)]
        pv: String,
        /// For meta: "validated" (default) or "paper"
        #[arg(long, default_value = "validated")]
        method: String,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Is the subgroup closed for the descriptor's topology?
    IsClosed {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        /// ab, ab:m, meta, sk:k, or id:<identities>
        #[arg(long)]
        pv: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Is the subgroup dense for the descriptor's topology?
    IsDense {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        /// ab, ab:m, meta, or nilpotent
        #[arg(long)]
        pv: String,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smith normal form of an integer matrix
    Snf {
        /// Matrix as JSON rows of integers or decimal strings
        #[arg(long)]
        matrix: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Cross-examine the metabelian closure procedure on this subgroup
    ValidateMeta {
        #[command(flatten)]
        subgroup: SubgroupArgs,
        #[command(flatten)]
        budgets: BudgetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

enum CliError {
    Usage(String),
    Budget(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<AutomatonError> for CliError {
    fn from(e: AutomatonError) -> Self {
        match e {
            AutomatonError::BudgetExceeded(m) => CliError::Budget(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<QuotientError> for CliError {
    fn from(e: QuotientError) -> Self {
        match e {
            QuotientError::BudgetExceeded(m) => CliError::Budget(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<metabelian::MetaError> for CliError {
    fn from(e: metabelian::MetaError) -> Self {
        CliError::Budget(e.to_string())
    }
}

impl From<PvError> for CliError {
    fn from(e: PvError) -> Self {
        match e {
            PvError::Automaton(inner) => inner.into(),
            PvError::Quotient(inner) => inner.into(),
            PvError::Meta(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let deadline = std::env::var("PROTOP_BUDGET_MS")
        .ok()
        .and_then(|v| v.parse::<u64>().ok())
        .map(|ms| Instant::now() + Duration::from_millis(ms));
    match run(cli.cmd, deadline) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Budget(msg)) => {
            eprintln!("budget error: {msg}");
            ExitCode::from(3)
        }
    }
}

struct Report {
    text: String,
    json: Value,
    automaton: Option<StallingsAutomaton>,
}

fn finish(report: Report, out: &OutputArgs) -> Result<(), CliError> {
    print!("{}", report.text);
    if out.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report.json).expect("serializable")
        );
    }
    if let Some(path) = &out.dot {
        let aut = report
            .automaton
            .as_ref()
            .ok_or_else(|| usage("--dot is only available for automaton-valued results"))?;
        std::fs::write(path, aut.to_dot())
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn parse_gens(rank: usize, gens: &Option<String>) -> Result<Vec<Word>, CliError> {
    let Some(gens) = gens else {
        return Ok(Vec::new());
    };
    gens.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| Word::parse(t, rank).map_err(|e| usage(format!("word {t:?}: {e}"))))
        .collect()
}

/// Parses "a=(1 2);b=(1 2 3)" plus preimage cycles into (quotient,
/// element permutations, preimage element ids).
fn resolve_quotient_input(
    spec: &str,
    preimage: &str,
) -> Result<(FiniteQuotient, Vec<u32>), CliError> {
    let mut gen_cycles = Vec::new();
    for (i, part) in spec.split(';').enumerate() {
        let (name, cycles) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("expected letter=(cycles) in {part:?}")))?;
        let expect = ((b'a' + i as u8) as char).to_string();
        if name.trim() != expect {
            return Err(usage(format!(
                "quotient generators must be named in order; expected {expect:?}, got {name:?}"
            )));
        }
        gen_cycles.push(parse_cycles(cycles.trim())?);
    }
    let preimage_cycles: Vec<_> = preimage
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_cycles(t.trim()))
        .collect::<Result<_, _>>()?;
    let degree = gen_cycles
        .iter()
        .chain(preimage_cycles.iter())
        .flatten()
        .flatten()
        .copied()
        .max()
        .unwrap_or(1);
    let perms: Vec<Vec<usize>> = gen_cycles
        .iter()
        .map(|c| permutation_from_cycles(c, degree))
        .collect::<Result<_, _>>()?;
    let (q, elems) = FiniteQuotient::from_permutations(gen_cycles.len(), &perms)?;
    let mut ids = Vec::new();
    for cycles in &preimage_cycles {
        let p = permutation_from_cycles(cycles, degree)?;
        let id = elems
            .iter()
            .position(|e| *e == p)
            .ok_or_else(|| usage("preimage permutation is not an element of the quotient"))?;
        ids.push(id as u32);
    }
    Ok((q, ids))
}

fn resolve_subgroup(args: &SubgroupArgs) -> Result<StallingsAutomaton, CliError> {
    match (&args.gens_from_quotient, &args.preimage) {
        (Some(spec), Some(pre)) => {
            if args.rank.is_some() || args.gens.is_some() {
                return Err(usage(
                    "--gens-from-quotient/--preimage cannot be combined with --rank/--gens",
                ));
            }
            let (q, ids) = resolve_quotient_input(spec, pre)?;
            Ok(q.preimage_subgroup(&ids))
        }
        (None, None) => {
            let rank = args
                .rank
                .ok_or_else(|| usage("--rank is required (or use --gens-from-quotient)"))?;
            let gens = parse_gens(rank, &args.gens)?;
            Ok(StallingsAutomaton::from_generators(rank, &gens)?)
        }
        _ => Err(usage("--gens-from-quotient and --preimage must be given together")),
    }
}

fn index_to_json(index: &SubgroupIndex) -> Value {
    match index {
        SubgroupIndex::Finite(m) => json!(m.to_string()),
        SubgroupIndex::Infinite => Value::Null,
    }
}

fn words_to_json(words: &[Word]) -> Value {
    Value::Array(words.iter().map(Word::to_json).collect())
}

fn automaton_summary(aut: &StallingsAutomaton) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(
        s,
        "automaton: rank {}, {} vertices, base 0",
        aut.rank(),
        aut.num_vertices()
    )
    .unwrap();
    for (u, l, v) in aut.edges() {
        writeln!(
            s,
            "  {u} -{}-> {v}",
            protop::words::letter_name(l as i32, aut.rank())
        )
        .unwrap();
    }
    s
}

fn closure_to_json(cl: &ClosureDescriptor) -> Value {
    let topology = match cl.topology {
        AbelianTopology::Ab => "ab".to_string(),
        AbelianTopology::AbMod(m) => format!("ab:{m}"),
    };
    json!({
        "topology": topology,
        "finitely_generated": cl.finitely_generated,
        "index": cl.index.as_ref().map(|i| i.to_string()),
        "invariant_factors": cl.invariant_factors.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "free_rank": cl.free_rank,
        "basis": cl.basis.as_ref().map(|b| words_to_json(b)),
        "automaton": cl.automaton.as_ref().map(|a| a.to_json()),
    })
}

fn closure_text(cl: &ClosureDescriptor) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    match &cl.index {
        Some(i) => writeln!(s, "closure index: {i}").unwrap(),
        None => writeln!(s, "closure index: infinite (free rank {})", cl.free_rank).unwrap(),
    }
    writeln!(
        s,
        "invariant factors: [{}]",
        cl.invariant_factors
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    )
    .unwrap();
    if let Some(basis) = &cl.basis {
        writeln!(
            s,
            "basis ({}): {}",
            basis.len(),
            basis.iter().map(Word::to_string).collect::<Vec<_>>().join(", ")
        )
        .unwrap();
    }
    writeln!(s, "finitely generated: {}", cl.finitely_generated).unwrap();
    match &cl.index {
        Some(i) => writeln!(s, "INDEX {i}").unwrap(),
        None => writeln!(s, "INDEX INFINITE").unwrap(),
    }
    s
}

fn certificate_to_json(cert: &Certificate) -> Value {
    json!({
        "subgroup": cert.subgroup.to_json(),
        "index": cert.index,
        "core_quotient_order": cert.core_quotient_order,
        "core_derived_series": cert.core_derived_series,
    })
}

fn big_index_to_json(i: &BigIndex) -> Value {
    match i {
        BigIndex::Finite(v) => json!(v.to_string()),
        BigIndex::Infinite => Value::Null,
    }
}

fn big_index_text(i: &BigIndex) -> String {
    match i {
        BigIndex::Finite(v) => v.to_string(),
        BigIndex::Infinite => "INFINITE".into(),
    }
}

fn paper_report_to_json(r: &PaperClosureReport) -> Value {
    json!({
        "ab_closure": closure_to_json(&r.ab_closure),
        "g_index": big_index_to_json(&r.g_index),
        "hg_prime_index": r.hg_prime_index.as_ref().map(big_index_to_json),
        "claimed_index": big_index_to_json(&r.claimed_index),
        "candidates": r.candidates.iter().map(|a| a.to_json()).collect::<Vec<_>>(),
    })
}

fn validated_report_to_json(r: &ValidatedReport) -> Value {
    let status = match r.status {
        ValidationStatus::Verified => "verified",
        ValidationStatus::Contradicted => "contradicted",
        ValidationStatus::Unverified => "unverified",
    };
    json!({
        "paper": paper_report_to_json(&r.paper),
        "status": status,
        "note": r.note,
        "checks": r.checks.iter().map(|c| json!({
            "word": c.word.to_json(),
            "verdict": c.verdict,
        })).collect::<Vec<_>>(),
        "contradiction": r.contradiction.as_ref().map(certificate_to_json),
    })
}

fn run(cmd: Cmd, deadline: Option<Instant>) -> Result<(), CliError> {
    match cmd {
        Cmd::Stallings { subgroup, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let text = format!(
                "{}VERTICES {}\n",
                automaton_summary(&aut),
                aut.num_vertices()
            );
            finish(Report { text, json: aut.to_json(), automaton: Some(aut) }, &out)
        }
        Cmd::Member { subgroup, word, pv, budgets, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let w = Word::parse(&word, aut.rank())
                .map_err(|e| usage(format!("word {word:?}: {e}")))?;
            run_member(&aut, &w, pv.as_deref(), &budgets, deadline, &out)
        }
        Cmd::Basis { subgroup, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let basis = aut.basis();
            let mut text = String::new();
            for b in &basis {
                text.push_str(&format!("{b}\n"));
            }
            text.push_str(&format!("BASIS SIZE {}\n", basis.len()));
            finish(
                Report {
                    text,
                    json: json!({"basis": words_to_json(&basis), "size": basis.len()}),
                    automaton: Some(aut),
                },
                &out,
            )
        }
        Cmd::Index { subgroup, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let index = aut.index();
            let text = match index {
                SubgroupIndex::Finite(m) => format!("FINITE {m}\n"),
                SubgroupIndex::Infinite => "INFINITE\n".to_string(),
            };
            finish(
                Report {
                    text,
                    json: json!({"index": index_to_json(&index)}),
                    automaton: Some(aut),
                },
                &out,
            )
        }
        Cmd::Intersect { rank, gens, gens2, out } => {
            let g1 = parse_gens(rank, &Some(gens))?;
            let g2 = parse_gens(rank, &Some(gens2))?;
            let a1 = StallingsAutomaton::from_generators(rank, &g1)?;
            let a2 = StallingsAutomaton::from_generators(rank, &g2)?;
            let cap = a1.intersect(&a2)?;
            let text = format!(
                "{}VERTICES {}\n",
                automaton_summary(&cap),
                cap.num_vertices()
            );
            finish(Report { text, json: cap.to_json(), automaton: Some(cap) }, &out)
        }
        Cmd::Core { subgroup, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            if aut.index() == SubgroupIndex::Infinite {
                let text = "core is only defined for finite-index subgroups\nINFINITE\n";
                return finish(
                    Report {
                        text: text.into(),
                        json: json!({"index": Value::Null}),
                        automaton: Some(aut),
                    },
                    &out,
                );
            }
            let (core, transversal) = aut.core_subgroup()?;
            let mut text = automaton_summary(&core);
            text.push_str(&format!(
                "transversal: {}\n",
                transversal.iter().map(Word::to_string).collect::<Vec<_>>().join(", ")
            ));
            text.push_str(&format!("CORE INDEX {}\n", core.num_vertices()));
            let json = json!({
                "core": core.to_json(),
                "transversal": words_to_json(&transversal),
                "core_index": core.num_vertices(),
            });
            finish(Report { text, json, automaton: Some(core) }, &out)
        }
        Cmd::Overgroups { subgroup, max_vertices, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let budget = OvergroupBudget { max_vertices, deadline };
            let over = aut.overgroups(&budget)?;
            let mut text = String::new();
            for k in &over {
                text.push_str(&format!(
                    "{} vertices, index {}\n",
                    k.num_vertices(),
                    match k.index() {
                        SubgroupIndex::Finite(m) => m.to_string(),
                        SubgroupIndex::Infinite => "infinite".into(),
                    }
                ));
            }
            text.push_str(&format!("OVERGROUPS {}\n", over.len()));
            let json = json!({
                "count": over.len(),
                "overgroups": over.iter().map(|a| a.to_json()).collect::<Vec<_>>(),
            });
            finish(Report { text, json, automaton: None }, &out)
        }
        Cmd::SubgroupsOfIndex { rank, index, list, out } => {
            if index == 0 {
                return Err(usage("--index must be at least 1"));
            }
            let budget = EnumBudget { deadline, ..EnumBudget::default() };
            let subs = enumerate_index_subgroups(rank, index, &budget)?;
            let mut text = String::new();
            if list {
                for s in &subs {
                    text.push_str(&automaton_summary(s));
                }
            }
            text.push_str(&format!("SUBGROUPS {}\n", subs.len()));
            let json = json!({
                "count": subs.len(),
                "subgroups": subs.iter().map(|a| a.to_json()).collect::<Vec<_>>(),
            });
            finish(Report { text, json, automaton: None }, &out)
        }
        Cmd::SchreierBasis { subgroup, radius, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let oracle = |w: &Word| aut.member(w);
            let ball = schreier_ball(&oracle, aut.rank(), radius, None);
            let mut text = format!(
                "ball of radius {radius}: {} cosets, {} edges\n",
                ball.num_vertices(),
                ball.edges().len()
            );
            for b in ball.basis_chunk() {
                text.push_str(&format!("{b}\n"));
            }
            text.push_str(&format!("BASIS CHUNK {}\n", ball.basis_chunk().len()));
            let json = json!({
                "radius": radius,
                "cosets": ball.num_vertices(),
                "representatives": words_to_json(ball.representatives()),
                "edges": ball.edges().iter().map(|&(u, l, v)| json!([u, l, v])).collect::<Vec<_>>(),
                "tree": ball.tree_edges().iter().map(|&(u, l, v)| json!([u, l, v])).collect::<Vec<_>>(),
                "basis_chunk": words_to_json(ball.basis_chunk()),
            });
            finish(Report { text, json, automaton: None }, &out)
        }
        Cmd::Closure { subgroup, pv, method, budgets, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            match pv.as_str() {
                "ab" => {
                    let cl = abelian::ab_closure(&aut);
                    let automaton = cl.automaton.clone();
                    finish(
                        Report { text: closure_text(&cl), json: closure_to_json(&cl), automaton },
                        &out,
                    )
                }
                "meta" => run_meta_closure(&aut, &method, &budgets, deadline, &out),
                other => match pv::parse_descriptor(other).map_err(CliError::from)? {
                    PseudovarietyDescriptor::AbMod(m) => {
                        let cl = abelian::abm_closure(&aut, m);
                        let automaton = cl.automaton.clone();
                        finish(
                            Report {
                                text: closure_text(&cl),
                                json: closure_to_json(&cl),
                                automaton,
                            },
                            &out,
                        )
                    }
                    _ => Err(usage(format!(
                        "closure supports ab, ab:m and meta, not {other:?}"
                    ))),
                },
            }
        }
        Cmd::IsClosed { subgroup, pv: pv_text, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let descriptor = pv::parse_descriptor(&pv_text)?;
            let report = pv::is_closed(&aut, &descriptor)?;
            let route = match report.route {
                pv::ClosednessRoute::InfiniteIndexShortcut => "infinite-index-shortcut",
                pv::ClosednessRoute::CoreQuotientCheck => "core-quotient-check",
                pv::ClosednessRoute::ProfiniteTrivial => "profinite-trivial",
            };
            let mut text = format!("route: {route}\n");
            if let Some(q) = &report.core_quotient {
                text.push_str(&format!(
                    "core quotient: order {}, derived series {:?}\n",
                    q.order, q.derived_series
                ));
            }
            text.push_str(if report.closed { "CLOSED\n" } else { "NOT CLOSED\n" });
            let json = json!({
                "closed": report.closed,
                "route": route,
                "core_quotient": report.core_quotient.as_ref().map(|q| json!({
                    "order": q.order,
                    "derived_series": q.derived_series,
                })),
            });
            finish(Report { text, json, automaton: Some(aut) }, &out)
        }
        Cmd::IsDense { subgroup, pv: pv_text, budgets, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            let query = match pv_text.as_str() {
                "nilpotent" => DensityQuery::Nilpotent,
                other => DensityQuery::from_descriptor(&pv::parse_descriptor(other)?)?,
            };
            let budget = budgets.to_budget(deadline);
            let outcome = pv::is_dense(&aut, &query, &budget)?;
            let (verdict, json_verdict) = match &outcome {
                DenseOutcome::Dense => ("DENSE\n", "dense"),
                DenseOutcome::NotDense => ("NOT DENSE\n", "not-dense"),
                DenseOutcome::Exhausted(_) => ("EXHAUSTED\n", "exhausted"),
            };
            let json = json!({"verdict": json_verdict});
            finish(Report { text: verdict.into(), json, automaton: Some(aut) }, &out)
        }
        Cmd::Snf { matrix, out } => run_snf(&matrix, &out),
        Cmd::ValidateMeta { subgroup, budgets, out } => {
            let aut = resolve_subgroup(&subgroup)?;
            run_meta_closure(&aut, "validated", &budgets, deadline, &out)
        }
    }
}

fn run_member(
    aut: &StallingsAutomaton,
    w: &Word,
    pv_text: Option<&str>,
    budgets: &BudgetArgs,
    deadline: Option<Instant>,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let (verdict, json): (bool, Value) = match pv_text {
        None => {
            let m = aut.member(w);
            (m, json!({"verdict": if m { "member" } else { "nonmember" }}))
        }
        Some("ab") | Some("sk:1") => {
            let m = abelian::ab_member(aut, w);
            (m, json!({"verdict": if m { "member" } else { "nonmember" }}))
        }
        Some("meta") | Some("sk:2") => {
            let budget = budgets.to_budget(deadline);
            let verdict = metabelian::meta_member(aut, w, &budget)?;
            let json = match &verdict {
                MetaVerdict::Member(witness) => json!({
                    "verdict": "member",
                    "factorization": witness.factorization,
                    "subgroup_word": witness.subgroup_word.to_json(),
                    "residual": witness.residual.to_json(),
                }),
                MetaVerdict::NonMember(cert) => json!({
                    "verdict": "nonmember",
                    "certificate": certificate_to_json(cert),
                }),
                MetaVerdict::Exhausted(r) => json!({
                    "verdict": "exhausted",
                    "report": {
                        "max_len": r.max_len,
                        "max_index": r.max_index,
                        "products_tested": r.products_tested,
                        "positive_truncated": r.positive_truncated,
                        "negative_truncated": r.negative_truncated,
                    },
                }),
            };
            let text = match &verdict {
                MetaVerdict::Member(_) => "MEMBER\n",
                MetaVerdict::NonMember(_) => "NON-MEMBER\n",
                MetaVerdict::Exhausted(_) => "EXHAUSTED\n",
            };
            return finish(Report { text: text.into(), json, automaton: None }, out);
        }
        Some(other) => match pv::parse_descriptor(other).map_err(CliError::from)? {
            PseudovarietyDescriptor::AbMod(m) => {
                let member = abelian::abm_member(aut, w, m);
                (
                    member,
                    json!({"verdict": if member { "member" } else { "nonmember" }}),
                )
            }
            _ => {
                return Err(usage(format!(
                    "member supports ab, ab:m, meta (and sk:1/sk:2 aliases), not {other:?}"
                )));
            }
        },
    };
    let text = if verdict { "MEMBER\n" } else { "NON-MEMBER\n" };
    finish(Report { text: text.into(), json, automaton: None }, out)
}

fn run_meta_closure(
    aut: &StallingsAutomaton,
    method: &str,
    budgets: &BudgetArgs,
    deadline: Option<Instant>,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let budget = budgets.to_budget(deadline);
    match method {
        "paper" => {
            let report = metabelian::meta_closure_paper(aut)?;
            let mut text = format!(
                "abelian closure index: {}\n",
                big_index_text(&report.g_index)
            );
            if let Some(h) = &report.hg_prime_index {
                text.push_str(&format!("relative abelian index: {}\n", big_index_text(h)));
            }
            text.push_str(&format!("candidates: {}\n", report.candidates.len()));
            text.push_str(&format!(
                "CLAIMED INDEX {}\n",
                big_index_text(&report.claimed_index)
            ));
            finish(
                Report { text, json: paper_report_to_json(&report), automaton: None },
                out,
            )
        }
        "validated" => {
            let report = metabelian::meta_closure_validated(aut, &budget)?;
            let verdict = match report.status {
                ValidationStatus::Verified => "VERIFIED",
                ValidationStatus::Contradicted => "CONTRADICTED",
                ValidationStatus::Unverified => "UNVERIFIED",
            };
            let mut text = format!(
                "claimed index: {}\n",
                big_index_text(&report.paper.claimed_index)
            );
            text.push_str(&format!("note: {}\n", report.note));
            for c in &report.checks {
                text.push_str(&format!("check {}: {}\n", c.word, c.verdict));
            }
            text.push_str(&format!("{verdict}\n"));
            finish(
                Report { text, json: validated_report_to_json(&report), automaton: None },
                out,
            )
        }
        other => Err(usage(format!("--method must be paper or validated, not {other:?}"))),
    }
}

fn run_snf(matrix_text: &str, out: &OutputArgs) -> Result<(), CliError> {
    let value: Value = serde_json::from_str(matrix_text)
        .map_err(|e| usage(format!("matrix must be JSON: {e}")))?;
    let rows_json = value
        .as_array()
        .ok_or_else(|| usage("matrix must be an array of rows"))?;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for row in rows_json {
        let row = row
            .as_array()
            .ok_or_else(|| usage("each row must be an array"))?;
        let mut entries = Vec::new();
        for e in row {
            let v = match e {
                Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| usage(format!("non-integer entry {n}")))?,
                Value::String(s) => s
                    .parse::<BigInt>()
                    .map_err(|_| usage(format!("bad integer string {s:?}")))?,
                other => return Err(usage(format!("bad matrix entry {other}"))),
            };
            entries.push(v);
        }
        rows.push(entries);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(usage("matrix must be non-empty and rectangular"));
    }
    let m = IntMatrix::from_rows(rows);
    let snf = intlin::smith_normal_form(&m);
    debug_assert!(snf.verify(&m));
    let factors: Vec<String> = snf.diagonal.iter().map(|f| f.to_string()).collect();
    let text = format!("FACTORS {}\n", factors.join(","));
    let json = json!({
        "diagonal": factors,
        "u": snf.u.to_json(),
        "s": snf.s.to_json(),
        "v": snf.v.to_json(),
    });
    finish(Report { text, json, automaton: None }, out)
}
