use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use mekler_core::analysis::{Analyzer, IotaMode, TypeKind};
use mekler_core::fo::{self, FinStructure};
use mekler_core::graph::{find_nice_graphs, is_nice, Graph};
use mekler_core::group::GroupContext;
use mekler_core::repro;
use mekler_core::tree::{self, Coloring, TreeNode};
use mekler_core::witness::{self, ArrayFile, CheckReport, FamilyFile, StructureSource, WitnessFamily};

use crate::manifest::Inputs;
use crate::{CliError, Command, GroupArgs, IotaArg, KindArg, Outcome, ShapeArg, TreeCommand, WitnessCommand};

type Result<T> = std::result::Result<T, CliError>;

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

pub fn run(cmd: &Command, seed: u64, inputs: &mut Inputs) -> Result<Outcome> {
    match cmd {
        Command::CheckNice { graph } => check_nice(&load_graph(graph, inputs)?),
        Command::FindNice { max_n } => find_nice(*max_n),
        Command::GroupInfo { group, allow_non_nice } => group_info(group, *allow_non_nice, inputs),
        Command::Classify { group, u, w } => classify(group, u, w.as_deref(), inputs),
        Command::SweepClassify { group } => sweep(group, inputs),
        Command::Gamma { group, check_iso } => gamma(group, *check_iso, inputs),
        Command::Transversal { group, iota_mode } => transversal(group, *iota_mode, inputs),
        Command::Tree(t) => tree_command(t, inputs),
        Command::Witness(w) => witness_command(w, inputs),
        Command::Repro { only } => repro_command(seed, *only),
    }
}

fn load_graph(spec: &str, inputs: &mut Inputs) -> Result<Graph> {
    let builtin = |prefix: &str| spec.strip_prefix(prefix).map(|n| n.parse::<usize>());
    if let Some(n) = builtin("cycle:") {
        let n = n.map_err(invalid)?;
        return if (3..=64).contains(&n) { Ok(Graph::cycle(n)) } else { Err(invalid("cycle length must be 3..=64")) };
    }
    if let Some(n) = builtin("path:") {
        let n = n.map_err(invalid)?;
        return if (1..=64).contains(&n) { Ok(Graph::path(n)) } else { Err(invalid("path length must be 1..=64")) };
    }
    let text = inputs.read(Path::new(spec))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(spec.to_string(), e.to_string()))
}

fn graph_json(g: &Graph) -> Value {
    serde_json::to_value(g).expect("graph serializes")
}

fn context(args: &GroupArgs, allow_non_nice: bool, inputs: &mut Inputs) -> Result<GroupContext> {
    let g = load_graph(&args.graph, inputs)?;
    GroupContext::new(args.p, g, allow_non_nice).map_err(invalid)
}

fn check_nice(g: &Graph) -> Result<Outcome> {
    let report = is_nice(g);
    let text = match &report.violation {
        None => "nice\n".to_string(),
        Some(v) => format!("not nice: {v:?}\n"),
    };
    Ok(Outcome { ok: report.nice, text, json: serde_json::to_value(&report).expect("serializes") })
}

fn find_nice(max_n: usize) -> Result<Outcome> {
    let graphs = find_nice_graphs(max_n).map_err(invalid)?;
    let mut text = format!("{} nice graph(s) with at most {max_n} vertices\n", graphs.len());
    for g in &graphs {
        let edges: Vec<String> = g.edges().map(|(a, b)| format!("{a}-{b}")).collect();
        writeln!(text, "  n={} edges: {}", g.n(), edges.join(" ")).unwrap();
    }
    let json = json!({ "max_n": max_n, "graphs": graphs.iter().map(graph_json).collect::<Vec<_>>() });
    Ok(Outcome { ok: true, text, json })
}

fn group_info(args: &GroupArgs, allow_non_nice: bool, inputs: &mut Inputs) -> Result<Outcome> {
    let c = context(args, allow_non_nice, inputs)?;
    let center = c.center_u_projection();
    let json = json!({
        "p": c.p(),
        "n": c.n(),
        "nonedges": c.nonedges(),
        "order": format!("{}^{}", c.p(), c.order_exponent()),
        "order_decimal": c.group_order().to_string(),
        "universal_vertices": c.universal_vertices(),
        "center_dim": center.dim() + c.nonedges().len(),
    });
    let text = format!(
        "p = {}, n = {}, non-edges = {}\n|G| = {}^{} = {}\ncenter has dimension {} (universal vertices {:?})\n",
        c.p(),
        c.n(),
        c.nonedges().len(),
        c.p(),
        c.order_exponent(),
        c.group_order(),
        center.dim() + c.nonedges().len(),
        c.universal_vertices()
    );
    Ok(Outcome { ok: true, text, json })
}

fn parse_vector(s: &str, len: usize, what: &str) -> Result<Vec<u32>> {
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| invalid(format!("{what}: {e}")))?;
    if v.len() != len {
        return Err(invalid(format!("{what} needs {len} entries, got {}", v.len())));
    }
    Ok(v)
}

fn classify(args: &GroupArgs, u: &str, w: Option<&str>, inputs: &mut Inputs) -> Result<Outcome> {
    let c = context(args, false, inputs)?;
    let u = parse_vector(u, c.n(), "u")?;
    let w = match w {
        Some(w) => parse_vector(w, c.nonedges().len(), "w")?,
        None => vec![0; c.nonedges().len()],
    };
    let g = c.element(u, w).map_err(invalid)?;
    let an = Analyzer::new(&c).map_err(invalid)?;
    let label = an.classify(&g);
    let class = an.class_index(&g.u).map(|i| &an.classes()[i]);
    let handle = (label.kind == TypeKind::TypeP).then(|| an.handle_of(&g).map(|h| h.u).map_err(|e| e.to_string()));
    let json = json!({
        "element": g,
        "label": label,
        "proper": an.is_proper(&g),
        "class": class.map(|cl| json!({ "representative": cl.representative, "size": cl.size, "centralizer_dim": cl.kernel.dim() })),
        "handle": handle,
    });
    let mut text = format!("type {:?} (q = {}, isolated = {})\nproper: {}\n", label.kind, label.q, label.isolated, an.is_proper(&g));
    if let Some(cl) = class {
        writeln!(text, "∼-class of {} vectors, representative {:?}", cl.size, cl.representative).unwrap();
    }
    if let Some(h) = handle {
        match h {
            Ok(u) => writeln!(text, "handle {u:?}").unwrap(),
            Err(e) => writeln!(text, "handle: {e}").unwrap(),
        }
    }
    Ok(Outcome { ok: true, text, json })
}

fn sweep(args: &GroupArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let c = context(args, false, inputs)?;
    let an = Analyzer::new(&c).map_err(invalid)?;
    let s = an.summary();
    let ok = s.kinds.iter().all(|k| k.0 != TypeKind::Anomalous);
    let mut text = format!("{:<10} {:>8} {:>8}\n", "type", "classes", "vectors");
    for (kind, classes, vectors) in &s.kinds {
        writeln!(text, "{:<10} {classes:>8} {vectors:>8}", format!("{kind:?}")).unwrap();
    }
    writeln!(text, "center dimension {}, V_nu dimension {}", s.center_dim, s.v_nu_dim).unwrap();
    Ok(Outcome { ok, text, json: serde_json::to_value(&s).expect("serializes") })
}

fn gamma(args: &GroupArgs, check_iso: bool, inputs: &mut Inputs) -> Result<Outcome> {
    let c = context(args, false, inputs)?;
    let an = Analyzer::new(&c).map_err(invalid)?;
    let g = an.gamma().map_err(invalid)?;
    let iso = an.gamma_roundtrip().map_err(invalid)?;
    let mut text = format!("Γ has {} vertices and {} edges\n", g.n(), g.edge_count());
    match &iso {
        Some(m) => writeln!(text, "isomorphic to the input: {m:?}").unwrap(),
        None => writeln!(text, "not isomorphic to the input").unwrap(),
    }
    let ok = !check_iso || iso.is_some();
    Ok(Outcome { ok, text, json: json!({ "gamma": graph_json(&g), "iso": iso }) })
}

fn transversal(args: &GroupArgs, mode: IotaArg, inputs: &mut Inputs) -> Result<Outcome> {
    let c = context(args, false, inputs)?;
    let an = Analyzer::new(&c).map_err(invalid)?;
    let mode = match mode {
        IotaArg::NuAndP => IotaMode::NuAndP,
        IotaArg::Literal => IotaMode::Literal,
    };
    let t = an.build_transversal(mode).map_err(invalid)?;
    let report = an.verify_transversal(&t, mode);
    let comp = an.complement_h(&t).map_err(invalid)?;
    let mut text = format!(
        "X_nu: {}, X_p: {}, X_iota: {}\n⟨X⟩ has order {}^{}, H has order {}^{}\n",
        t.x_nu.len(),
        t.x_p.len(),
        t.x_iota.len(),
        c.p(),
        comp.generated.order_exponent(),
        c.p(),
        comp.h.dim()
    );
    for cl in &report.clauses {
        writeln!(text, "clause {} ({}): {}", cl.clause, cl.name, if cl.pass { "pass" } else { "FAIL" }).unwrap();
        if let Some(d) = &cl.detail {
            writeln!(text, "  {d}").unwrap();
        }
    }
    let json = json!({
        "transversal": t,
        "report": report,
        "generated_order_exponent": comp.generated.order_exponent(),
        "h_basis": comp.h_basis(&c),
    });
    Ok(Outcome { ok: report.pass, text, json })
}

fn parse_tuple(s: &str) -> Result<Vec<TreeNode>> {
    s.split(',').map(|x| x.trim().parse::<TreeNode>().map_err(invalid)).collect()
}

fn load_coloring(path: &Path, inputs: &mut Inputs) -> Result<Coloring> {
    let text = inputs.read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(path.display().to_string(), e.to_string()))
}

fn tree_command(t: &TreeCommand, inputs: &mut Inputs) -> Result<Outcome> {
    match t {
        TreeCommand::Qftp { first, second } => {
            let (a, b) = (parse_tuple(first)?, parse_tuple(second)?);
            let equal = tree::qftp_equal(&a, &b).map_err(invalid)?;
            let (fa, fb) = (tree::qftp_fingerprint(&a), tree::qftp_fingerprint(&b));
            let text = format!("{}\n", if equal { "same quantifier-free type" } else { "different quantifier-free types" });
            Ok(Outcome { ok: true, text, json: json!({ "equal": equal, "first": fa, "second": fb }) })
        }
        TreeCommand::Cofinal { coloring } => {
            let col = load_coloring(coloring, inputs)?;
            let found = tree::find_cofinal_color(&col).map_err(invalid)?;
            let text = match &found {
                Some((c, star)) => format!("color {c} is cofinal above {}\n", star.to_key()),
                None => "no cofinal color\n".to_string(),
            };
            let json = json!({ "found": found.as_ref().map(|(c, s)| json!({ "color": c, "node": s })) });
            Ok(Outcome { ok: found.is_some(), text, json })
        }
        TreeCommand::Mono { shape, depth, width, coloring } => {
            let col = load_coloring(coloring, inputs)?;
            let report = match shape {
                ShapeArg::Sop2 => tree::mono_subtree_sop2(&col, *depth),
                ShapeArg::Sop1 => tree::mono_subtree_sop1(&col, *depth),
                ShapeArg::Tp1 => tree::mono_subtree_tp1(&col, *depth, *width),
            }
            .map_err(invalid)?;
            let valid = report.embedding.as_ref().map(|e| tree::validate::shape(&col, report.shape, e));
            let mut text = String::new();
            for a in &report.attempts {
                writeln!(text, "color {}: {}", a.color, if a.found { "found" } else { "none" }).unwrap();
            }
            if let Some(e) = &report.embedding {
                for (s, t) in &e.map {
                    writeln!(text, "  {:>6} ↦ {}", s.to_key(), t.to_key()).unwrap();
                }
            }
            if let Some(Err(msg)) = &valid {
                writeln!(text, "validator rejected the embedding: {msg}").unwrap();
            }
            let ok = matches!(valid, Some(Ok(())));
            Ok(Outcome { ok, text, json: json!({ "report": report, "valid": ok }) })
        }
    }
}

fn load_structure(src: StructureSource, base: &Path, inputs: &mut Inputs) -> Result<FinStructure> {
    match src {
        StructureSource::Inline(s) => Ok(s),
        StructureSource::Path(p) => {
            let path = base.parent().unwrap_or(Path::new(".")).join(p);
            let text = inputs.read(&path)?;
            serde_json::from_str(&text).map_err(|e| CliError::Parse(path.display().to_string(), e.to_string()))
        }
    }
}

fn load_family(path: &Path, inputs: &mut Inputs) -> Result<WitnessFamily> {
    let text = inputs.read(path)?;
    let file: FamilyFile =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(path.display().to_string(), e.to_string()))?;
    let src = file.structure.clone();
    let s = load_structure(src, path, inputs)?;
    file.into_family(s).map_err(invalid)
}

fn report_outcome(r: CheckReport) -> Outcome {
    let mut text = format!("{}: {}\n", r.check, if r.pass { "pass" } else { "FAIL" });
    for c in &r.clauses {
        writeln!(text, "  clause {} ({}): {} [{} checked]", c.name, c.description, if c.pass { "pass" } else { "FAIL" }, c.checked).unwrap();
        if let Some(cx) = &c.counterexample {
            writeln!(text, "    counterexample: {}", serde_json::to_string(cx).expect("serializes")).unwrap();
        }
    }
    Outcome { ok: r.pass, text, json: serde_json::to_value(&r).expect("serializes") }
}

fn witness_command(w: &WitnessCommand, inputs: &mut Inputs) -> Result<Outcome> {
    match w {
        WitnessCommand::Check { kind, family, k, s } => {
            let f = load_family(family, inputs)?;
            let r = match kind {
                KindArg::Sop1 => witness::check_sop1(&f),
                KindArg::Sop2 => witness::check_sop2(&f),
                KindArg::Tp1 => witness::check_tp1(&f),
                KindArg::WeakKtp1 => witness::check_weak_ktp1(&f, *k),
                KindArg::StrongIndiscernible => witness::check_strong_indiscernible(&f, *s),
            }
            .map_err(invalid)?;
            Ok(report_outcome(r))
        }
        WitnessCommand::Array { family, k, indiscernible } => {
            let text = inputs.read(family)?;
            let file: ArrayFile =
                serde_json::from_str(&text).map_err(|e| CliError::Parse(family.display().to_string(), e.to_string()))?;
            let s = load_structure(file.structure.clone(), family, inputs)?;
            let a = file.into_array(s).map_err(invalid)?;
            Ok(report_outcome(witness::check_sop1_array(&a, *k, *indiscernible).map_err(invalid)?))
        }
        WitnessCommand::BasedOn { family, base, formula, vars } => {
            if formula.len() != vars.len() {
                return Err(invalid("every --formula needs a matching --vars"));
            }
            let b = load_family(family, inputs)?;
            let a = load_family(base, inputs)?;
            let mut list = Vec::new();
            for (f, v) in formula.iter().zip(vars) {
                let phi = fo::parse_formula(f).map_err(invalid)?;
                list.push((phi, v.split(',').map(|x| x.trim().to_string()).collect()));
            }
            Ok(report_outcome(witness::check_based_on(&b, &a, &list).map_err(invalid)?))
        }
    }
}

fn repro_command(seed: u64, only: Option<usize>) -> Result<Outcome> {
    let report = match only {
        Some(id) if (1..=repro::CRITERIA).contains(&id) => {
            let c = repro::run_criterion(id, seed);
            repro::ReproReport { seed, pass: c.pass, criteria: vec![c] }
        }
        Some(id) => return Err(invalid(format!("criteria are numbered 1 to {}, got {id}", repro::CRITERIA))),
        None => repro::run(seed),
    };
    let mut text = format!("{:>3}  {:<40} {}\n", "#", "criterion", "result");
    for c in &report.criteria {
        writeln!(text, "{:>3}  {:<40} {}", c.id, c.name, if c.pass { "PASS" } else { "FAIL" }).unwrap();
    }
    writeln!(text, "{}", if report.pass { "all criteria pass" } else { "some criteria FAIL" }).unwrap();
    Ok(Outcome { ok: report.pass, text, json: serde_json::to_value(&report).expect("serializes") })
}
