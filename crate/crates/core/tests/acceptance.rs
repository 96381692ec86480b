//! Acceptance suite. Each criterion runs in isolation, prints one
//! PASS/FAIL line, and the binary exits nonzero if any fails.
//!
//! The library computes; the checks here use separate brute-force oracles
//! written directly from the definitions (string prefixes for trees,
//! bilinear forms for commutation, breadth-first closure for subgroups,
//! permutation enumeration for automorphisms).

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mekler_core::analysis::{Analyzer, IotaMode, TypeKind};
use mekler_core::fo::{self, FinStructure};
use mekler_core::graph::{find_nice_graphs, Graph};
use mekler_core::group::{rewrite, GroupContext, GroupElement};
use mekler_core::repro;
use mekler_core::tree::{self, Coloring, Embedding, TreeDomain, TreeNode};
use mekler_core::witness::{self, ArrayFamily, BranchStructure, Counterexample, WitnessFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;

fn rng(id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ (id << 32))
}

fn k3_with_flag() -> Graph {
    Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap()
}

// ---------------------------------------------------------------------------
// group oracles

/// `[x, y] = 0` read off the commutator coordinates `x_i y_j - x_j y_i`.
fn commute(g: &Graph, p: u32, x: &[u32], y: &[u32]) -> bool {
    let p = p as i64;
    (0..g.n()).all(|i| {
        (i + 1..g.n()).all(|j| g.adjacent(i, j) || (x[i] as i64 * y[j] as i64 - x[j] as i64 * y[i] as i64).rem_euclid(p) == 0)
    })
}

fn all_vectors(p: u32, n: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..p).map(move |d| { let mut w = v.clone(); w.push(d); w })).collect();
    }
    out
}

struct OracleClasses {
    /// lex-least member of each ∼-class, with its kind, in lex order
    classes: Vec<(Vec<u32>, TypeKind)>,
    class_of: HashMap<Vec<u32>, usize>,
    kinds: BTreeMap<TypeKind, (usize, usize)>,
}

/// Classification from centralizer sets computed pairwise.
fn oracle_classes(g: &Graph, p: u32) -> OracleClasses {
    let vecs = all_vectors(p, g.n());
    let central: Vec<&Vec<u32>> = vecs.iter().filter(|x| vecs.iter().all(|y| commute(g, p, x, y))).collect();
    let center_size = central.len();
    let mut by_centralizer: BTreeMap<Vec<bool>, Vec<Vec<u32>>> = BTreeMap::new();
    for x in &vecs {
        if central.contains(&x) {
            continue;
        }
        let key: Vec<bool> = vecs.iter().map(|y| commute(g, p, x, y)).collect();
        by_centralizer.entry(key).or_default().push(x.clone());
    }
    let approx = (p as usize - 1) * center_size;
    let mut classes = Vec::new();
    for (key, members) in &by_centralizer {
        let x = &members[0];
        assert_eq!(members.len() % approx, 0, "∼-class is a union of ≈-classes");
        let q = members.len() / approx;
        // isolated: every non-central commuting vector is r·x + z
        let isolated = vecs.iter().zip(key).filter(|(y, &c)| c && !central.contains(y)).all(|(y, _)| {
            (1..p).any(|r| {
                let diff: Vec<u32> = y.iter().zip(x).map(|(&a, &b)| (a + p * p - r * b) % p).collect();
                central.contains(&&diff)
            })
        });
        let kind = match q {
            1 if isolated => TypeKind::OneIota,
            1 => TypeKind::OneNu,
            q if q == p as usize - 1 => TypeKind::PMinusOne,
            q if q == p as usize => TypeKind::TypeP,
            _ => TypeKind::Anomalous,
        };
        classes.push((members.clone(), kind));
    }
    classes.sort_by(|a, b| a.0[0].cmp(&b.0[0]));
    let mut class_of = HashMap::new();
    let mut kinds: BTreeMap<TypeKind, (usize, usize)> = BTreeMap::new();
    for (i, (members, kind)) in classes.iter().enumerate() {
        for m in members {
            class_of.insert(m.clone(), i);
        }
        let e = kinds.entry(*kind).or_default();
        e.0 += 1;
        e.1 += members.len();
    }
    OracleClasses { classes: classes.into_iter().map(|(m, k)| (m[0].clone(), k)).collect(), class_of, kinds }
}

/// Closure of a generating set by breadth-first multiplication.
fn closure(c: &GroupContext, gens: &[GroupElement]) -> HashSet<GroupElement> {
    let mut seen = HashSet::from([c.identity()]);
    let mut queue = VecDeque::from([c.identity()]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = c.mul(&x, g);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen
}

// ---------------------------------------------------------------------------
// tree oracles on plain strings

fn s(n: &TreeNode) -> String {
    n.to_key()
}

fn o_prec(a: &str, b: &str) -> bool {
    b.starts_with(a)
}

fn o_meet(a: &str, b: &str) -> String {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).map(|(x, _)| x).collect()
}

fn o_lex(a: &str, b: &str) -> bool {
    if a.len() < b.len() && o_prec(a, b) {
        return true;
    }
    if o_prec(a, b) || o_prec(b, a) {
        return false;
    }
    let k = o_meet(a, b).len();
    a.as_bytes()[k] < b.as_bytes()[k]
}

fn o_closure(t: &[String]) -> Vec<String> {
    let mut c: Vec<String> = t.iter().flat_map(|a| t.iter().map(move |b| o_meet(a, b))).collect();
    c.sort_by(|a, b| if o_lex(a, b) { std::cmp::Ordering::Less } else if a == b { std::cmp::Ordering::Equal } else { std::cmp::Ordering::Greater });
    c.dedup();
    c
}

/// Same quantifier-free type: the order-preserving matching of meet
/// closures respects positions, `⊲` and `∧`.
fn o_same_type(a: &[String], b: &[String]) -> bool {
    let (ca, cb) = (o_closure(a), o_closure(b));
    if a.len() != b.len() || ca.len() != cb.len() {
        return false;
    }
    let pos = |c: &[String], x: &str| c.iter().position(|y| y == x).unwrap();
    if a.iter().zip(b).any(|(x, y)| pos(&ca, x) != pos(&cb, y)) {
        return false;
    }
    for i in 0..ca.len() {
        for j in 0..ca.len() {
            if o_prec(&ca[i], &ca[j]) != o_prec(&cb[i], &cb[j])
                || pos(&ca, &o_meet(&ca[i], &ca[j])) != pos(&cb, &o_meet(&cb[i], &cb[j]))
            {
                return false;
            }
        }
    }
    true
}

fn random_string(rng: &mut impl Rng, max_len: usize, b: u8) -> String {
    let len = rng.gen_range(0..max_len);
    (0..len).map(|_| char::from(b'0' + rng.gen_range(0..b))).collect()
}

fn node(s: &str) -> TreeNode {
    s.parse().unwrap()
}

/// Shape checks for extracted embeddings, on strings.
fn o_valid(col: &Coloring, e: &Embedding, shape: &str) -> bool {
    let m: Vec<(String, String)> = e.map.iter().map(|(a, b)| (s(a), s(b))).collect();
    let img = |x: &str| m.iter().find(|(a, _)| a == x).map(|(_, b)| b.clone());
    let dom = e.source;
    if m.len() != dom.node_count() || m.iter().any(|(_, b)| col.color(&node(b)) != e.color || !col.domain().contains(&node(b))) {
        return false;
    }
    for (a, ia) in &m {
        for (b, ib) in &m {
            let strict = a.len() < b.len() && o_prec(a, b);
            if strict && !(ia.len() < ib.len() && o_prec(ia, ib)) {
                return false;
            }
            let incomp = !o_prec(a, b) && !o_prec(b, a);
            if shape != "sop1" && incomp && (o_prec(ia, ib) || o_prec(ib, ia)) {
                return false;
            }
        }
        if a.len() + 1 < dom.height {
            match shape {
                "sop2" => {
                    for d in ['0', '1'] {
                        if !o_prec(&format!("{ia}{d}"), &img(&format!("{a}{d}")).unwrap()) {
                            return false;
                        }
                    }
                }
                "sop1" => {
                    let right = img(&format!("{a}1")).unwrap();
                    let left = img(&format!("{a}0")).unwrap();
                    let Some(xi) = right.strip_suffix('1') else { return false };
                    if !o_prec(ia, xi) || !o_prec(&format!("{xi}0"), &left) {
                        return false;
                    }
                    // everything above η⌢0 stays above ξ⌢0
                    if m.iter().any(|(b, ib)| o_prec(&format!("{a}0"), b) && !o_prec(&format!("{xi}0"), ib)) {
                        return false;
                    }
                }
                _ => {}
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// witness oracles

/// Any element satisfies `φ` with every listed parameter tuple.
fn o_consistent(f: &WitnessFamily, params: &[&Vec<usize>]) -> bool {
    let st = f.structure();
    let c = fo::compile(st, f.formula(), &[f.object_vars(), f.param_vars()].concat()).unwrap();
    fo::all_tuples(st.size(), f.object_vars().len()).any(|x| {
        params.iter().all(|p| {
            let mut v = x.clone();
            v.extend(p.iter());
            c.holds(st, &v)
        })
    })
}

fn o_sop2(f: &WitnessFamily) -> bool {
    let d = f.domain();
    let branches_ok = d.leaves().iter().all(|l| {
        let b = d.branch(l);
        o_consistent(f, &b.iter().map(|n| f.param(n)).collect::<Vec<_>>())
    });
    let nodes = d.nodes();
    let pairs_ok = nodes.iter().all(|a| {
        nodes.iter().all(|b| {
            let (sa, sb) = (s(a), s(b));
            o_prec(&sa, &sb) || o_prec(&sb, &sa) || !o_consistent(f, &[f.param(a), f.param(b)])
        })
    });
    branches_ok && pairs_ok
}

// ---------------------------------------------------------------------------
// criteria

fn c1() {
    let mut r = rng(1);
    for (p, g) in [(3, Graph::cycle(5)), (5, Graph::cycle(5)), (3, k3_with_flag())] {
        let c = GroupContext::new(p, g, true).unwrap();
        let e = c.identity();
        for _ in 0..1000 {
            let (a, b, d) = (c.random_element(&mut r), c.random_element(&mut r), c.random_element(&mut r));
            assert_eq!(c.mul(&c.mul(&a, &b), &d), c.mul(&a, &c.mul(&b, &d)));
            assert_eq!(c.mul(&a, &e), a);
            assert_eq!(c.mul(&e, &a), a);
            assert!(c.mul(&a, &c.inv(&a)).is_identity() && c.mul(&c.inv(&a), &a).is_identity());
        }
    }
    // the non-nice case is only reachable on request
    assert!(GroupContext::new(3, k3_with_flag(), false).is_err());
}

fn c2() {
    let c = GroupContext::new(3, Graph::cycle(5), false).unwrap();
    let mut count = 0;
    for g in c.enumerate_elements().unwrap() {
        count += 1;
        // g·g·g by repeated multiplication
        assert!(c.mul(&c.mul(&g, &g), &g).is_identity(), "{g:?}");
    }
    assert_eq!(count, 59049);
    let mut r = rng(2);
    for _ in 0..1000 {
        let (g, h, k) = (c.random_element(&mut r), c.random_element(&mut r), c.random_element(&mut r));
        // [x, y] = x⁻¹ y⁻¹ x y spelled out
        let comm = |x: &GroupElement, y: &GroupElement| c.mul(&c.mul(&c.inv(x), &c.inv(y)), &c.mul(x, y));
        assert!(comm(&comm(&g, &h), &k).is_identity());
    }
}

fn c3() {
    let graphs = find_nice_graphs(6).unwrap();
    assert_eq!(graphs.len(), 2, "C5 and C6 are the nice graphs on at most 6 vertices");
    for g in graphs {
        let p = 3;
        let c = GroupContext::new(p, g.clone(), false).unwrap();
        let m = c.nonedges().len();
        for i in 0..g.n() {
            for j in 0..g.n() {
                if i == j {
                    continue;
                }
                // a_i⁻¹ a_j⁻¹ a_i a_j as a word, collected by the rewriting oracle
                let mut word = vec![i; p as usize - 1];
                word.extend(vec![j; p as usize - 1]);
                word.extend([i, j]);
                let collected = rewrite::collect(&c, &word, &vec![0; m]);
                assert_eq!(collected, c.comm(&c.generator(i), &c.generator(j)));
                let (lo, hi) = (i.min(j), i.max(j));
                if g.adjacent(i, j) {
                    assert!(collected.is_identity());
                } else {
                    let k = g.nonedges().iter().position(|&e| e == (lo, hi)).unwrap();
                    let mut w = vec![0; m];
                    w[k] = if i < j { 1 } else { p - 1 };
                    assert_eq!(collected, GroupElement { u: vec![0; g.n()], w });
                }
            }
        }
    }
}

fn c4() {
    let c = GroupContext::new(3, Graph::cycle(5), false).unwrap();
    let mut r = rng(4);
    for _ in 0..10_000 {
        let (g, h) = (c.random_element(&mut r), c.random_element(&mut r));
        assert_eq!(c.mul(&g, &h), rewrite::product(&c, &g, &h));
    }
}

fn c5() {
    let allowed = [TypeKind::OneNu, TypeKind::OneIota, TypeKind::PMinusOne, TypeKind::TypeP];
    for p in [3, 5] {
        let g = Graph::cycle(5);
        let c = GroupContext::new(p, g.clone(), false).unwrap();
        let an = Analyzer::new(&c).unwrap();
        let lib: BTreeMap<TypeKind, (usize, usize)> = an.summary().kinds.into_iter().map(|(k, a, b)| (k, (a, b))).collect();
        let oracle = oracle_classes(&g, p);
        assert_eq!(lib, oracle.kinds, "p = {p}");
        assert!(lib.keys().all(|k| allowed.contains(k)), "{lib:?}");
        let total: usize = lib.values().map(|v| v.1).sum();
        assert_eq!(total, (p as usize).pow(5) - 1);
        for x in all_vectors(p, 5).into_iter().skip(1) {
            assert_eq!(an.label_of_u(&x).kind, oracle.classes[oracle.class_of[&x]].1);
        }
    }
}

fn c6() {
    let g = Graph::cycle(5);
    let p = 3;
    let c = GroupContext::new(p, g.clone(), false).unwrap();
    let an = Analyzer::new(&c).unwrap();
    let oracle = oracle_classes(&g, p);
    let mut checked = 0;
    for (x, idx) in oracle.class_of.iter() {
        if oracle.classes[*idx].1 != TypeKind::TypeP {
            continue;
        }
        checked += 1;
        // oracle handle: the 1ν classes meeting the centralizer
        let mut handles: Vec<usize> = oracle
            .class_of
            .iter()
            .filter(|(y, &cy)| oracle.classes[cy].1 == TypeKind::OneNu && commute(&g, p, x, y))
            .map(|(_, &cy)| cy)
            .collect();
        handles.sort();
        handles.dedup();
        assert_eq!(handles.len(), 1, "{x:?}");
        let expected = &oracle.classes[handles[0]].0;
        for r in 1..p {
            let y: Vec<u32> = x.iter().map(|&a| a * r % p).collect();
            let h = an.handle_of(&c.from_u(&y)).expect("handle exists and is unique");
            assert_eq!(&h.u, expected);
        }
    }
    assert_eq!(checked, 60);
}

fn c7() {
    let mut cases: Vec<(u32, Graph)> = find_nice_graphs(6).unwrap().into_iter().map(|g| (3, g)).collect();
    cases.push((5, Graph::cycle(5)));
    for (p, g) in cases {
        let t = Instant::now();
        let c = GroupContext::new(p, g.clone(), false).unwrap();
        let an = Analyzer::new(&c).unwrap();
        let iso = an.gamma_roundtrip().unwrap().expect("Γ is isomorphic to the graph");
        // oracle Γ: 1ν classes in representative order, adjacent when commuting
        let oracle = oracle_classes(&g, p);
        let nu: Vec<&Vec<u32>> = oracle.classes.iter().filter(|c| c.1 == TypeKind::OneNu).map(|c| &c.0).collect();
        assert_eq!(nu.len(), g.n());
        let mut images: Vec<usize> = iso.clone();
        images.sort();
        assert_eq!(images, (0..g.n()).collect::<Vec<_>>());
        for a in 0..nu.len() {
            for b in a + 1..nu.len() {
                assert_eq!(commute(&g, p, nu[a], nu[b]), g.adjacent(iso[a], iso[b]));
            }
        }
        assert!(t.elapsed() < Duration::from_secs(60));
    }
}

fn c8() {
    let c = GroupContext::new(3, Graph::cycle(5), false).unwrap();
    let an = Analyzer::new(&c).unwrap();
    let t = an.build_transversal(IotaMode::default()).unwrap();
    assert!(an.verify_transversal(&t, IotaMode::default()).pass);
    let comp = an.complement_h(&t).unwrap();
    let gens: Vec<GroupElement> = t.all().cloned().collect();
    let gx = closure(&c, &gens);
    let h = comp.h_elements(&c);
    // |⟨X⟩| · |H| = |G| and ⟨X⟩ ∩ H = {e}
    assert_eq!(gx.len() * h.len(), 3usize.pow(10));
    assert_eq!(gx.len(), 3usize.pow(comp.generated.order_exponent() as u32));
    assert!(h.iter().all(|x| x.is_identity() || !gx.contains(x)));
    assert!(h.iter().all(|x| c.is_central_by_definition(x)));
    let mut r = rng(8);
    for _ in 0..1000 {
        let g = c.random_element(&mut r);
        let ways = h.iter().filter(|y| gx.contains(&c.mul(&g, &c.inv(y)))).count();
        assert_eq!(ways, 1);
        assert_eq!(comp.generated.contains(&c, &g), gx.contains(&g));
    }
}

fn c9() {
    let mut r = rng(9);
    let mut agreeing = 0;
    for i in 0..10_000 {
        let len = r.gen_range(1..=3);
        let a: Vec<String> = (0..len).map(|_| random_string(&mut r, 4, 3)).collect();
        let b: Vec<String> = if i % 2 == 0 {
            (0..len).map(|_| random_string(&mut r, 4, 3)).collect()
        } else {
            // a shifted copy shares the type whenever it fits
            let pre = random_string(&mut r, 2, 3);
            let shifted: Vec<String> = a.iter().map(|x| format!("{pre}{x}")).collect();
            if shifted.iter().any(|x| x.len() >= 4) {
                a.clone()
            } else {
                shifted
            }
        };
        let (ta, tb): (Vec<TreeNode>, Vec<TreeNode>) = (a.iter().map(|x| node(x)).collect(), b.iter().map(|x| node(x)).collect());
        let same = o_same_type(&a, &b);
        assert_eq!(tree::qftp_equal(&ta, &tb).unwrap(), same, "{a:?} {b:?}");
        if same {
            agreeing += 1;
            assert!(o_same_type(&o_closure(&a), &o_closure(&b)));
            assert!(tree::qftp_equal(&tree::meet_closure(&ta), &tree::meet_closure(&tb)).unwrap());
        }
    }
    assert!(agreeing > 1000);
}

fn c10() {
    let host = TreeDomain::binary(14).unwrap();
    let e = tree::level_subsequence_embed(&host, &[2, 4, 5, 9, 13]).unwrap();
    let g = tree::gmap(&host, &[1, 2, 6, 7, 12]).unwrap();
    assert_eq!(s(&tree::level_subsequence_embed(&host, &[1, 3]).unwrap().apply(&node("1"))), "001");
    assert_eq!(s(&tree::gmap(&TreeDomain::new(6, 3).unwrap(), &[1, 3]).unwrap().apply(&node("12"))), "0102");
    let mut r = rng(10);
    for _ in 0..1000 {
        let (a, b) = (random_string(&mut r, 5, 2), random_string(&mut r, 5, 2));
        let (ea, eb) = (s(&e.apply(&node(&a))), s(&e.apply(&node(&b))));
        assert_eq!(o_prec(&a, &b), o_prec(&ea, &eb));
        assert_eq!(o_lex(&a, &b), o_lex(&ea, &eb));
        let (ga, gb) = (s(&g.apply(&node(&a))), s(&g.apply(&node(&b))));
        assert_eq!(o_prec(&a, &b), o_prec(&ga, &gb));
        assert_eq!(o_lex(&a, &b), o_lex(&ga, &gb));
        let mapped = s(&g.apply(&node(&o_meet(&a, &b))));
        let image_meet = o_meet(&ga, &gb);
        assert!(o_prec(&mapped, &image_meet) && image_meet[mapped.len()..].chars().all(|c| c == '0'));
    }
}

fn c11() {
    let constant = Coloring::from_fn(TreeDomain::binary(8).unwrap(), |_| 0);
    let parity = Coloring::from_fn(TreeDomain::binary(16).unwrap(), |v| (v.len() % 2) as u32);
    for col in [&constant, &parity] {
        for (shape, report) in [
            ("sop2", tree::mono_subtree_sop2(col, 3).unwrap()),
            ("sop1", tree::mono_subtree_sop1(col, 3).unwrap()),
            ("tp1", tree::mono_subtree_tp1(col, 3, 2).unwrap()),
        ] {
            let e = report.embedding.expect("embedding found");
            assert_eq!(e.source.height, 3);
            assert!(o_valid(col, &e, shape), "{shape} {e:?}");
        }
    }
    // color 0 only on the leftmost branch
    let spine = Coloring::from_fn(TreeDomain::binary(8).unwrap(), |v| v.digits().iter().any(|&d| d != 0) as u32);
    let report = tree::mono_subtree_sop2(&spine, 2).unwrap();
    let attempts: Vec<(u32, bool)> = report.attempts.iter().map(|a| (a.color, a.found)).collect();
    assert_eq!(attempts, vec![(0, false), (1, true)]);
    // exhaustive: no root colored 0 has a 0-colored node above its right child
    let dom = spine.domain();
    let zero_ok = dom.nodes().iter().any(|r| {
        spine.color(r) == 0 && ['0', '1'].iter().all(|d| dom.subtree(&node(&format!("{}{d}", s(r)))).iter().any(|x| spine.color(x) == 0))
    });
    assert!(!zero_ok);
    assert!(o_valid(&spine, &report.embedding.unwrap(), "sop2"));
}

fn c12() {
    let b = BranchStructure::new(4, 2).unwrap();
    let f = b.family();
    assert!(o_sop2(&f));
    assert!(witness::check_sop2(&f).unwrap().pass);
    assert!(witness::check_tp1(&f).unwrap().pass);
    assert!(witness::check_sop1(&f).unwrap().pass);
    assert!(witness::check_weak_ktp1(&f, 2).unwrap().pass);

    let cases = [
        (witness::mutate_universal_branch(&b, &f).unwrap(), "b"),
        (witness::mutate_duplicate_param(&b, &f).unwrap(), "b"),
        (witness::mutate_delete_branch(&b, &f, &node("101")).unwrap(), "a"),
    ];
    for (m, expected) in &cases {
        assert!(!o_sop2(m));
        for r in [witness::check_sop2(m).unwrap(), witness::check_sop1(m).unwrap(), witness::check_tp1(m).unwrap()] {
            assert_eq!(r.failing(), vec![*expected], "{}", r.check);
            match r.first_counterexample().unwrap() {
                Counterexample::Pair { first, second, .. } => {
                    let (a, c) = (s(first), s(second));
                    assert!(!o_prec(&a, &c) && !o_prec(&c, &a));
                    assert!(o_consistent(m, &[m.param(first), m.param(second)]));
                }
                Counterexample::Branch { leaf } => {
                    let branch = m.domain().branch(leaf);
                    assert!(!o_consistent(m, &branch.iter().map(|n| m.param(n)).collect::<Vec<_>>()));
                }
                other => panic!("unexpected counterexample {other:?}"),
            }
        }
    }

    let arr = ArrayFamily::from_comb(&f, 3).unwrap();
    let report = witness::check_sop1_array(&arr, 2, false).unwrap();
    assert!(report.pass, "{report:?}");
    // the child swap at 0^i is an automorphism fixing rows < i and
    // exchanging η_i and ν_i
    let st = f.structure();
    let d = f.domain();
    for (i, (eta, nu)) in witness::comb_paths(3).iter().enumerate() {
        let swap_node = |x: &str| -> String {
            if x.len() > i && x[..i].chars().all(|c| c == '0') {
                let mut y: Vec<u8> = x.bytes().collect();
                y[i] = if y[i] == b'0' { b'1' } else { b'0' };
                String::from_utf8(y).unwrap()
            } else {
                x.to_string()
            }
        };
        let leaves = d.leaves();
        let perm: Vec<usize> = (0..st.size())
            .map(|x| {
                if x < d.node_count() {
                    b.node_element(&node(&swap_node(&s(&d.node_at(x)))))
                } else {
                    b.branch_element(&node(&swap_node(&s(&leaves[x - d.node_count()])))).unwrap()
                }
            })
            .collect();
        for (_, rel) in st.relations() {
            for t in rel.tuples() {
                assert!(rel.tuples().contains(&t.iter().map(|&x| perm[x]).collect::<Vec<_>>()));
            }
        }
        assert_eq!(perm[b.node_element(eta)], b.node_element(nu));
        for (e2, n2) in &witness::comb_paths(i) {
            assert_eq!(perm[b.node_element(e2)], b.node_element(e2));
            assert_eq!(perm[b.node_element(n2)], b.node_element(n2));
        }
    }
}

fn c13() {
    let mut r = rng(13);
    let mut sop2_passes = 0;
    for _ in 0..50 {
        let f = witness::random_branch_family(&mut r, 4, 2).unwrap();
        let sop2 = witness::check_sop2(&f).unwrap().pass;
        assert_eq!(sop2, o_sop2(&f));
        sop2_passes += sop2 as usize;
        if sop2 {
            assert!(witness::check_sop1(&f).unwrap().pass);
        }
        if witness::check_tp1(&f).unwrap().pass {
            assert!(witness::check_sop2(&witness::restrict_to_binary(&f).unwrap()).unwrap().pass);
        }
    }
    assert!(sop2_passes > 0, "the sample exercises the implication");
}

fn brute_automorphisms(st: &FinStructure) -> usize {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        perms(n - 1)
            .into_iter()
            .flat_map(|p| (0..n).map(move |i| { let mut q = p.clone(); q.insert(i, n - 1); q }))
            .collect()
    }
    perms(st.size())
        .into_iter()
        .filter(|p| st.relations().all(|(_, r)| r.tuples().iter().all(|t| r.tuples().contains(&t.iter().map(|&x| p[x]).collect::<Vec<_>>()))))
        .count()
}

fn c14() {
    let c5 = FinStructure::from_graph(&Graph::cycle(5));
    assert_eq!(fo::automorphisms(&c5).unwrap().len(), 10);
    assert_eq!(brute_automorphisms(&c5), 10);
    let t = repro::prefix_tree_structure();
    assert_eq!(fo::automorphisms(&t).unwrap().len(), 8);
    assert_eq!(brute_automorphisms(&t), 8);
    for v in 0..5 {
        assert!(fo::orbit_equivalent(&c5, &[0], &[v], &[]).unwrap());
    }
    for (a, b) in Graph::cycle(5).edges() {
        assert!(fo::orbit_equivalent(&c5, &[0, 1], &[a, b], &[]).unwrap());
        assert!(fo::orbit_equivalent(&c5, &[0, 1], &[b, a], &[]).unwrap());
    }
    assert!(!fo::orbit_equivalent(&c5, &[0, 1], &[0, 2], &[]).unwrap());
    assert!(fo::orbit_equivalent(&c5, &[0], &[2], &[1]).unwrap());
    assert!(!fo::orbit_equivalent(&c5, &[0, 1], &[0, 2], &[0]).unwrap());
}

fn c15() {
    let a = serde_json::to_string(&repro::run(SEED)).unwrap();
    let b = serde_json::to_string(&repro::run(SEED)).unwrap();
    assert_eq!(a, b);
    let report: repro::ReproReport = serde_json::from_str(&a).unwrap();
    assert!(report.pass, "reproduction suite: {a}");
    assert_eq!(report.criteria.len(), repro::CRITERIA);
}

fn main() {
    let criteria: [(usize, fn(), u64); 15] = [
        (1, c1, 10),
        (2, c2, 60),
        (3, c3, 60),
        (4, c4, 60),
        (5, c5, 120),
        (6, c6, 60),
        (7, c7, 180),
        (8, c8, 60),
        (9, c9, 10),
        (10, c10, 60),
        (11, c11, 30),
        (12, c12, 60),
        (13, c13, 60),
        (14, c14, 60),
        (15, c15, 300),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    std::panic::set_hook(Box::new(|info| eprintln!("    {info}")));
    let mut failed = 0;
    for (id, f, budget) in criteria {
        let name = repro::criterion_name(id);
        if filter.as_ref().is_some_and(|flt| !name.contains(flt.as_str()) && flt != &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let on_time = elapsed <= Duration::from_secs(budget);
        let pass = outcome.is_ok() && on_time;
        failed += !pass as usize;
        let note = if outcome.is_ok() && !on_time { format!(" (over the {budget} s budget)") } else { String::new() };
        println!("criterion {id:>2} {:<40} {} [{:.2?}]{note}", name, if pass { "PASS" } else { "FAIL" }, elapsed);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
