//! Decomposition of a query into r-partitions and relevant type sequences.
//!
//! A tuple is split into classes: the connected components of the graph on
//! its components with an edge whenever two components are at distance at
//! most `2r`. Every class is described by its most significant variable (the
//! center), the type of the center, and the canonical positions `F` of the
//! other class members in the center's neighborhood. Different classes are
//! then far apart (distance above `2r`), which is the `Div` condition.
//!
//! For every partition and every combination of per-class patterns `(type, F)`
//! the plan keeps the type sequences for which some witness tuple satisfies
//! the query. Relevance is decided on one witness per combination; when the
//! query is `(r-1)`-local every tuple matching the same combination agrees on
//! the query.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{FormulaError, Result};
use crate::evaluator::Evaluator;
use crate::formula::{locality_radius, Formula, LocalityRadius};
use crate::neighborhood::{build_type_index, TypeId, TypeIndex};
use crate::structure::{build_distance_index, gaifman_graph, DistanceIndex, Elem, GaifmanGraph, Structure};

/// Radii used by the decomposition, clamped to the domain size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Radii {
    pub locality: LocalityRadius,
    /// Partition radius: classes are `2r`-connected, distinct classes `2r`-separated.
    pub r: u32,
    /// Radius of the neighborhood types.
    pub typing: u32,
}

/// `r` from the locality rule, and a typing radius large enough that every
/// class member and its `(r-1)`-ball lie inside the center's typed ball.
pub fn effective_radii(f: &Formula, n: usize, over: Option<u64>) -> Result<Radii, FormulaError> {
    let locality = locality_radius(f, over)?;
    let cap = n.max(1) as u64;
    let r = locality.r.min(cap);
    let k = f.k().max(1) as u64;
    let typing = (r * k).max((2 * k - 1) * r - 1).min(cap);
    Ok(Radii { locality, r: r as u32, typing: typing as u32 })
}

/// Work counters of the preprocessing phase, in abstract steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessCounts {
    pub graph: u64,
    pub bfs: u64,
    pub canonical: u64,
    pub ball_profile: u64,
    pub relevance: u64,
    pub evaluation: u64,
    pub pinning: u64,
}

impl PreprocessCounts {
    pub fn total(&self) -> u64 {
        self.graph + self.bfs + self.canonical + self.ball_profile + self.relevance + self.evaluation + self.pinning
    }
}

/// Indices shared by plan construction and enumeration.
#[derive(Debug, Clone)]
pub struct Context {
    pub radii: Radii,
    pub graph: GaifmanGraph,
    pub index: DistanceIndex,
    pub types: TypeIndex,
    /// `max_ball[D]`: largest `D`-ball over all elements.
    pub max_ball: Vec<usize>,
    pub counts: PreprocessCounts,
}

pub fn build_context(s: &Structure, f: &Formula, over: Option<u64>) -> Result<Context> {
    let radii = effective_radii(f, s.len(), over)?;
    let graph = gaifman_graph(s);
    let mut counts = PreprocessCounts {
        graph: (s.len() + s.elements().map(|e| s.incident(e).count()).sum::<usize>()) as u64,
        ..Default::default()
    };
    let index = build_distance_index(&graph, radii.typing);
    counts.bfs = index.build_steps();
    let types = build_type_index(s, &index, radii.typing)?;
    counts.canonical = types.build_steps();
    let dmax = (2 * radii.r as usize * f.k().max(1)).min(s.len().max(1));
    let (max_ball, steps) = ball_profile(&graph, dmax);
    counts.ball_profile = steps;
    Ok(Context { radii, graph, index, types, max_ball, counts })
}

/// Largest ball size at every radius up to `dmax`, by bounded BFS from each element.
fn ball_profile(g: &GaifmanGraph, dmax: usize) -> (Vec<usize>, u64) {
    let n = g.len();
    let mut best = vec![1usize.min(n); dmax + 1];
    let mut dist = vec![usize::MAX; n];
    let mut steps = 0u64;
    let mut seen = Vec::new();
    let mut counts = vec![0usize; dmax + 1];
    for a in 0..n {
        counts.iter_mut().for_each(|c| *c = 0);
        dist[a] = 0;
        seen.clear();
        seen.push(a);
        let mut head = 0;
        while head < seen.len() {
            let u = seen[head];
            head += 1;
            counts[dist[u]] += 1;
            if dist[u] == dmax {
                continue;
            }
            for &v in g.neighbors(u as Elem) {
                steps += 1;
                if dist[v as usize] == usize::MAX {
                    dist[v as usize] = dist[u] + 1;
                    seen.push(v as usize);
                }
            }
        }
        let mut acc = 0;
        for (d, c) in counts.iter().enumerate() {
            acc += c;
            best[d] = best[d].max(acc);
        }
        for &u in &seen {
            dist[u] = usize::MAX;
        }
    }
    (best, steps)
}

/// One class of an r-partition: head positions of its variables (ascending,
/// the first is the center) and canonical positions of the others.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionClass {
    pub vars: Vec<usize>,
    pub f: Vec<u32>,
}

impl PartitionClass {
    pub fn center(&self) -> usize {
        self.vars[0]
    }
}

/// Classes ordered by center.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RPartition {
    pub classes: Vec<PartitionClass>,
}

impl RPartition {
    pub fn m(&self) -> usize {
        self.classes.len()
    }
}

/// Set partitions of `0..k` in restricted-growth-string order. Classes come
/// ordered by least element and each class is ascending.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut a = vec![0usize; k];
    loop {
        let blocks = a.iter().max().unwrap() + 1;
        let mut p = vec![Vec::new(); blocks];
        for (i, &b) in a.iter().enumerate() {
            p[b].push(i);
        }
        out.push(p);
        // next restricted growth string
        let mut i = k - 1;
        loop {
            if i == 0 {
                return out;
            }
            let limit = a[..i].iter().max().unwrap() + 1;
            if a[i] < limit {
                a[i] += 1;
                a[i + 1..].iter_mut().for_each(|x| *x = 0);
                break;
            }
            i -= 1;
        }
    }
}

fn sequences(len: usize, bound: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    if len > 0 && bound == 0 {
        return out;
    }
    let mut cur = vec![0u32; len];
    loop {
        out.push(cur.clone());
        let mut i = len;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < bound {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// All r-partitions whose positions fit in some realized type.
pub fn enumerate_partitions(f: &Formula, ti: &TypeIndex) -> Vec<RPartition> {
    let bound = ti.registry().types().iter().map(|t| t.size()).max().unwrap_or(0) as u32;
    let mut out = Vec::new();
    for sp in set_partitions(f.k()) {
        let choices: Vec<Vec<Vec<u32>>> = sp.iter().map(|c| sequences(c.len() - 1, bound)).collect();
        let mut idx = vec![0usize; sp.len()];
        if choices.iter().any(Vec::is_empty) {
            continue;
        }
        loop {
            out.push(RPartition {
                classes: sp
                    .iter()
                    .zip(&idx)
                    .zip(&choices)
                    .map(|((vars, &i), ch)| PartitionClass { vars: vars.clone(), f: ch[i].clone() })
                    .collect(),
            });
            let mut j = sp.len();
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < choices[j].len() {
                    break;
                }
                idx[j] = 0;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    out
}

fn connected(items: &[Elem], mut close: impl FnMut(Elem, Elem) -> bool) -> bool {
    let n = items.len();
    let mut reached = vec![false; n];
    reached[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !reached[j] && close(items[i], items[j]) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|x| x)
}

/// Components of `t` belonging to each class, in class order.
fn class_components<'t>(t: &'t [Elem], p: &'t RPartition) -> impl Iterator<Item = Vec<Elem>> + 't {
    p.classes.iter().map(move |c| c.vars.iter().map(|&v| t[v]).collect())
}

/// The strengthened `Div` condition for tuple `t`.
pub fn div_holds(t: &[Elem], p: &RPartition, ix: &DistanceIndex, ti: &TypeIndex, r: u32) -> bool {
    let two_r = 2 * r;
    let comps: Vec<Vec<Elem>> = class_components(t, p).collect();
    for (c, members) in p.classes.iter().zip(&comps) {
        let ptrs = ti.pointers(members[0]);
        for (&pos, &e) in c.f.iter().zip(&members[1..]) {
            if ptrs.get(pos as usize) != Some(&e) {
                return false;
            }
        }
        if !connected(members, |a, b| ix.within(a, b, two_r)) {
            return false;
        }
    }
    for i in 0..comps.len() {
        for j in i + 1..comps.len() {
            if comps[i].iter().any(|&a| comps[j].iter().any(|&b| ix.within(a, b, two_r))) {
                return false;
            }
        }
    }
    true
}

/// Per-type distance matrices and the F patterns they admit.
pub(crate) struct Patterns {
    two_r: u32,
    dist: Vec<Vec<Vec<u32>>>,
    layer: Vec<Vec<u32>>,
    cache: HashMap<(TypeId, usize), Vec<Vec<u32>>>,
}

impl Patterns {
    pub(crate) fn new(ti: &TypeIndex, r: u32) -> Self {
        let mut dist = Vec::new();
        let mut layer = Vec::new();
        for t in ti.registry().types() {
            let rep = &t.representative;
            dist.push(rep.distances());
            layer.push((0..rep.size).map(|p| rep.layer_of(p) as u32).collect());
        }
        Patterns { two_r: 2 * r, dist, layer, cache: HashMap::new() }
    }

    pub(crate) fn admits(&self, t: TypeId, f: &[u32]) -> bool {
        let d = &self.dist[t as usize];
        if f.iter().any(|&p| p as usize >= d.len()) {
            return false;
        }
        let mut items = vec![0u32];
        items.extend_from_slice(f);
        connected(&items, |a, b| d[a as usize][b as usize] <= self.two_r)
    }

    /// F sequences of length `m - 1` that type `t` admits, in lex order.
    pub(crate) fn valid(&mut self, t: TypeId, m: usize) -> &[Vec<u32>] {
        if !self.cache.contains_key(&(t, m)) {
            let size = self.dist[t as usize].len() as u32;
            let v: Vec<Vec<u32>> = sequences(m - 1, size).into_iter().filter(|f| self.admits(t, f)).collect();
            self.cache.insert((t, m), v);
        }
        &self.cache[&(t, m)]
    }

    /// Largest distance from the center among the positions of `f`.
    pub(crate) fn spread(&self, t: TypeId, f: &[u32]) -> u32 {
        f.iter().map(|&p| self.layer[t as usize][p as usize]).max().unwrap_or(0)
    }
}

/// A class pattern fixed for search: type of the center and F.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ClassPattern {
    pub vars: Vec<usize>,
    pub f: Vec<u32>,
    pub ty: TypeId,
    /// More candidates than can ever conflict with the other classes.
    pub large: bool,
    pub conflict_bound: usize,
}

/// Builds the per-class patterns with their conflict bounds.
pub(crate) fn class_patterns(
    ctx: &Context,
    pats: &Patterns,
    classes: &[PartitionClass],
    types: &[TypeId],
) -> Vec<ClassPattern> {
    let two_r = 2 * ctx.radii.r as usize;
    classes
        .iter()
        .zip(types)
        .enumerate()
        .map(|(j, (c, &ty))| {
            let others: usize = classes.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, c)| c.vars.len()).sum();
            let reach = (pats.spread(ty, &c.f) as usize + two_r).min(ctx.max_ball.len() - 1);
            let bound = others * ctx.max_ball[reach];
            ClassPattern {
                vars: c.vars.clone(),
                f: c.f.clone(),
                ty,
                large: ctx.types.bucket(ty).len() > bound,
                conflict_bound: bound,
            }
        })
        .collect()
}

/// Whether the class placed at `center` is `2r`-separated from `others`.
pub(crate) fn separated(ctx: &Context, pat: &ClassPattern, center: Elem, others: &[Elem]) -> bool {
    let two_r = 2 * ctx.radii.r;
    let ptrs = ctx.types.pointers(center);
    let ok = |a: Elem| others.iter().all(|&b| !ctx.index.within(a, b, two_r));
    ok(center) && pat.f.iter().all(|&p| ok(ptrs[p as usize]))
}

/// Writes the components of the class centered at `center` into `t`.
pub(crate) fn place(ctx: &Context, pat: &ClassPattern, center: Elem, t: &mut [Elem]) {
    let ptrs = ctx.types.pointers(center);
    t[pat.vars[0]] = center;
    for (&v, &p) in pat.vars[1..].iter().zip(&pat.f) {
        t[v] = ptrs[p as usize];
    }
}

/// Some tuple realizing the patterns with pairwise separated classes. Small
/// classes are searched first, so the large ones never backtrack.
pub(crate) fn find_witness(ctx: &Context, pats: &[ClassPattern], k: usize, steps: &mut u64) -> Option<Vec<Elem>> {
    let mut order: Vec<usize> = (0..pats.len()).collect();
    order.sort_by_key(|&j| (pats[j].large, ctx.types.bucket(pats[j].ty).len(), j));
    let mut t = vec![0 as Elem; k];
    let mut pos = vec![0usize; pats.len()];
    let mut placed: Vec<Elem> = Vec::new();
    let mut marks = vec![0usize; pats.len() + 1];
    let mut level = 0;
    while level < order.len() {
        let pat = &pats[order[level]];
        let bucket = ctx.types.bucket(pat.ty);
        let mut found = false;
        while pos[level] < bucket.len() {
            let c = bucket[pos[level]];
            pos[level] += 1;
            *steps += 1;
            if separated(ctx, pat, c, &placed) {
                place(ctx, pat, c, &mut t);
                placed.truncate(marks[level]);
                placed.extend(pat.vars.iter().map(|&v| t[v]));
                marks[level + 1] = placed.len();
                found = true;
                break;
            }
        }
        if found {
            level += 1;
        } else {
            if level == 0 {
                return None;
            }
            pos[level] = 0;
            level -= 1;
            placed.truncate(marks[level]);
        }
    }
    Some(t)
}

/// An r-partition with its relevant type sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanEntry {
    pub partition: RPartition,
    pub sequences: Vec<Vec<TypeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionPlan {
    pub head: Vec<String>,
    pub r: u32,
    pub typing_radius: u32,
    pub entries: Vec<PlanEntry>,
}

impl DecompositionPlan {
    pub fn k(&self) -> usize {
        self.head.len()
    }

    /// Number of (entry, sequence) pairs.
    pub fn sequence_count(&self) -> usize {
        self.entries.iter().map(|e| e.sequences.len()).sum()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "plan k={} r={} typing_radius={} entries={}",
            self.k(),
            self.r,
            self.typing_radius,
            self.entries.len()
        );
        for (i, e) in self.entries.iter().enumerate() {
            let classes: Vec<String> = e
                .partition
                .classes
                .iter()
                .map(|c| {
                    let vars: Vec<&str> = c.vars.iter().map(|&v| self.head[v].as_str()).collect();
                    let f: Vec<String> = c.f.iter().map(u32::to_string).collect();
                    format!("{{{}}}@{} F=({})", vars.join(","), self.head[c.center()], f.join(","))
                })
                .collect();
            let _ = writeln!(out, "entry {i} {}", classes.join(" | "));
            for seq in &e.sequences {
                let s: Vec<String> = seq.iter().map(u32::to_string).collect();
                let _ = writeln!(out, "  types {}", s.join(","));
            }
        }
        out
    }
}

/// Type sequences of realized types that are relevant for `p`.
pub fn relevant_sequences(p: &RPartition, f: &Formula, s: &Structure, ctx: &Context) -> Vec<Vec<TypeId>> {
    let pats = Patterns::new(&ctx.types, ctx.radii.r);
    let mut steps = 0;
    let mut eval = Evaluator::new(s, f);
    let candidates: Vec<Vec<TypeId>> = p
        .classes
        .iter()
        .map(|c| (0..ctx.types.num_types() as TypeId).filter(|&t| pats.admits(t, &c.f)).collect())
        .collect();
    let mut out = Vec::new();
    for seq in product(&candidates) {
        let cps = class_patterns(ctx, &pats, &p.classes, &seq);
        if let Some(t) = find_witness(ctx, &cps, f.k(), &mut steps) {
            if eval.holds(&t) {
                out.push(seq);
            }
        }
    }
    out
}

fn product<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                l.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Builds the plan over prebuilt indices; relevance and evaluation work is
/// added to `ctx.counts`.
pub fn build_plan_with(f: &Formula, s: &Structure, ctx: &mut Context) -> Result<DecompositionPlan> {
    if f.is_sentence() {
        return Err(crate::error::EnumError::Sentence.into());
    }
    let k = f.k();
    let mut pats = Patterns::new(&ctx.types, ctx.radii.r);
    let mut eval = Evaluator::new(s, f);
    let mut relevance = 0u64;
    let mut entries = Vec::new();
    for sp in set_partitions(k) {
        // per class: every (F, type) the realized types admit
        let per_class: Vec<Vec<(Vec<u32>, TypeId)>> = sp
            .iter()
            .map(|vars| {
                let mut v = Vec::new();
                for t in 0..ctx.types.num_types() as TypeId {
                    for fseq in pats.valid(t, vars.len()) {
                        v.push((fseq.clone(), t));
                    }
                }
                v.sort();
                v
            })
            .collect();
        let mut grouped: BTreeMap<Vec<Vec<u32>>, Vec<Vec<TypeId>>> = BTreeMap::new();
        for combo in product(&per_class) {
            let classes: Vec<PartitionClass> = sp
                .iter()
                .zip(&combo)
                .map(|(vars, (fseq, _))| PartitionClass { vars: vars.clone(), f: fseq.clone() })
                .collect();
            let types: Vec<TypeId> = combo.iter().map(|&(_, t)| t).collect();
            let cps = class_patterns(ctx, &pats, &classes, &types);
            if let Some(t) = find_witness(ctx, &cps, k, &mut relevance) {
                if eval.holds(&t) {
                    grouped.entry(combo.iter().map(|(fs, _)| fs.clone()).collect()).or_default().push(types);
                }
            }
        }
        for (fs, mut seqs) in grouped {
            seqs.sort();
            seqs.dedup();
            let classes = sp.iter().zip(fs).map(|(vars, f)| PartitionClass { vars: vars.clone(), f }).collect();
            entries.push(PlanEntry { partition: RPartition { classes }, sequences: seqs });
        }
    }
    ctx.counts.relevance += relevance;
    ctx.counts.evaluation += eval.steps();
    Ok(DecompositionPlan {
        head: f.free_variables().iter().map(|s| s.to_string()).collect(),
        r: ctx.radii.r,
        typing_radius: ctx.radii.typing,
        entries,
    })
}

pub fn build_plan(f: &Formula, s: &Structure, over: Option<u64>) -> Result<DecompositionPlan> {
    let mut ctx = build_context(s, f, over)?;
    build_plan_with(f, s, &mut ctx)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::evaluator::brute_enumerate;
    use crate::formula::{parse_formula, Signature};
    use crate::structure::tests::{cycle, path3};
    use crate::structure::{load_structure, StructureBuilder};

    /// Tuples satisfying `Div` and the type tests of some entry, by brute force.
    pub(crate) fn denotation(plan: &DecompositionPlan, s: &Structure, ctx: &Context) -> Vec<Vec<Elem>> {
        let k = plan.k();
        let n = s.len() as Elem;
        let mut out = Vec::new();
        let mut t = vec![0 as Elem; k];
        if n == 0 {
            return out;
        }
        loop {
            let hit = plan.entries.iter().any(|e| {
                div_holds(&t, &e.partition, &ctx.index, &ctx.types, ctx.radii.r)
                    && e.sequences.iter().any(|seq| {
                        e.partition.classes.iter().zip(seq).all(|(c, &ty)| ctx.types.type_of(t[c.center()]) == ty)
                    })
            });
            if hit {
                out.push(t.clone());
            }
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                t[i] += 1;
                if t[i] < n {
                    break;
                }
                t[i] = 0;
            }
        }
    }

    fn prepared(s: &Structure, q: &str, over: Option<u64>) -> (Formula, Context, DecompositionPlan) {
        let f = parse_formula(q, s.signature()).unwrap();
        let mut ctx = build_context(s, &f, over).unwrap();
        let plan = build_plan_with(&f, s, &mut ctx).unwrap();
        (f, ctx, plan)
    }

    #[test]
    fn set_partition_counts() {
        // Bell numbers
        let counts: Vec<usize> = (1..=5).map(|k| set_partitions(k).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52]);
        assert_eq!(set_partitions(2), vec![vec![vec![0, 1]], vec![vec![0], vec![1]]]);
        for p in set_partitions(4) {
            assert!(p.windows(2).all(|w| w[0][0] < w[1][0]));
        }
    }

    #[test]
    fn partitions_k1_and_k2() {
        let s = path3();
        let f = parse_formula("E(x,x)", s.signature()).unwrap();
        let ctx = build_context(&s, &f, Some(1)).unwrap();
        let ps = enumerate_partitions(&f, &ctx.types);
        assert_eq!(ps, vec![RPartition { classes: vec![PartitionClass { vars: vec![0], f: vec![] }] }]);

        let g = parse_formula("E(x,y)", s.signature()).unwrap();
        let ctx = build_context(&s, &g, Some(1)).unwrap();
        let ps = enumerate_partitions(&g, &ctx.types);
        let merged = ps.iter().filter(|p| p.m() == 1).count();
        let split = ps.iter().filter(|p| p.m() == 2).count();
        assert_eq!(split, 1);
        let maxsize = ctx.types.registry().types().iter().map(|t| t.size()).max().unwrap();
        assert_eq!(merged, maxsize);
    }

    #[test]
    fn edgeless_keeps_coincident_pairs() {
        let s = load_structure("rel E 2\nnode a\nnode b\nnode c\n").unwrap();
        let f = parse_formula("E(x,y) | !E(x,y)", s.signature()).unwrap();
        let ctx = build_context(&s, &f, Some(1)).unwrap();
        let ps = enumerate_partitions(&f, &ctx.types);
        // neighborhoods have size 1: only F = (0) for the merged class
        let merged: Vec<_> = ps.iter().filter(|p| p.m() == 1).collect();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].classes[0].f, vec![0]);
        let (_, ctx, plan) = prepared(&s, "E(x,y) | !E(x,y)", Some(1));
        assert_eq!(denotation(&plan, &s, &ctx).len(), 9);
    }

    #[test]
    fn div_examples() {
        let s = path3();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        let ctx = build_context(&s, &f, Some(1)).unwrap();
        let split = RPartition {
            classes: vec![PartitionClass { vars: vec![0], f: vec![] }, PartitionClass { vars: vec![1], f: vec![] }],
        };
        // N_1(1) and N_1(3) share 2
        assert!(!div_holds(&[0, 2], &split, &ctx.index, &ctx.types, 1));

        let c10 = cycle(10);
        let f = parse_formula("!E(x,y)", c10.signature()).unwrap();
        let ctx = build_context(&c10, &f, Some(2)).unwrap();
        assert!(ctx.index.depth() >= 4);
        // oracle: balls of radius 2 around 0 and 5 are {8,9,0,1,2} and {3,4,5,6,7}
        let b0: Vec<Elem> = vec![8, 9, 0, 1, 2];
        let b5: Vec<Elem> = vec![3, 4, 5, 6, 7];
        assert!(b0.iter().all(|x| !b5.contains(x)));
        assert!(div_holds(&[0, 5], &split, &ctx.index, &ctx.types, 2));
        assert!(!div_holds(&[0, 4], &split, &ctx.index, &ctx.types, 2));

        let single = RPartition { classes: vec![PartitionClass { vars: vec![0], f: vec![] }] };
        let ps = load_structure("rel P 1\nnode a\nnode b\nfact P a\n").unwrap();
        let g = parse_formula("P(x)", ps.signature()).unwrap();
        let ctx = build_context(&ps, &g, None).unwrap();
        assert!(div_holds(&[0], &single, &ctx.index, &ctx.types, ctx.radii.r));
        assert!(div_holds(&[1], &single, &ctx.index, &ctx.types, ctx.radii.r));
    }

    #[test]
    fn relevance_examples() {
        let s = path3();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        let ctx = build_context(&s, &f, None).unwrap();
        let merged = enumerate_partitions(&f, &ctx.types).into_iter().filter(|p| p.m() == 1);
        let any = merged.into_iter().any(|p| !relevant_sequences(&p, &f, &s, &ctx).is_empty());
        assert!(any);

        let g = parse_formula("E(x,y) & !E(x,y)", s.signature()).unwrap();
        let ctx = build_context(&s, &g, Some(1)).unwrap();
        for p in enumerate_partitions(&g, &ctx.types) {
            assert!(relevant_sequences(&p, &g, &s, &ctx).is_empty());
        }
        let (_, _, plan) = prepared(&s, "E(x,y) & !E(x,y)", Some(1));
        assert!(plan.entries.is_empty());

        // split partition at r=1 needs distance > 2: impossible on P3
        let h = parse_formula("!E(x,y) & !(x = y)", s.signature()).unwrap();
        let ctx = build_context(&s, &h, Some(1)).unwrap();
        let split = RPartition {
            classes: vec![PartitionClass { vars: vec![0], f: vec![] }, PartitionClass { vars: vec![1], f: vec![] }],
        };
        assert!(relevant_sequences(&split, &h, &s, &ctx).is_empty());

        // on P6 the split sequences are exactly the type pairs at distance > 2
        let p6 = load_structure(
            "rel E 2\nnode 1\nnode 2\nnode 3\nnode 4\nnode 5\nnode 6\nfact E 1 2\nfact E 2 3\nfact E 3 4\nfact E 4 5\nfact E 5 6\n",
        )
        .unwrap();
        let h = parse_formula("!E(x,y) & !(x = y)", p6.signature()).unwrap();
        let ctx = build_context(&p6, &h, Some(1)).unwrap();
        let mut expected: Vec<Vec<TypeId>> = Vec::new();
        for a in 0..6u32 {
            for b in 0..6u32 {
                if a.abs_diff(b) > 2 {
                    expected.push(vec![ctx.types.type_of(a), ctx.types.type_of(b)]);
                }
            }
        }
        expected.sort();
        expected.dedup();
        assert_eq!(relevant_sequences(&split, &h, &p6, &ctx), expected);
    }

    #[test]
    fn plan_examples() {
        let s = path3();
        for (q, over) in [("E(x,y)", None), ("E(x,y)", Some(1)), ("exists y E(x,y)", None), ("exists y (E(x,y) | E(y,x))", None)] {
            let (f, ctx, plan) = prepared(&s, q, over);
            assert_eq!(denotation(&plan, &s, &ctx), brute_enumerate(&s, &f), "{q}");
        }
        let (_, ctx, plan) = prepared(&s, "E(x,y)", None);
        assert_eq!(denotation(&plan, &s, &ctx), vec![vec![0, 1], vec![1, 2]]);
        let (_, ctx, plan) = prepared(&s, "exists y (E(x,y) | E(y,x))", None);
        assert_eq!(denotation(&plan, &s, &ctx), vec![vec![0], vec![1], vec![2]]);

        let sym = load_structure("rel E 2\nnode 1\nnode 2\nnode 3\nfact E 1 2\nfact E 2 1\nfact E 2 3\nfact E 3 2\n").unwrap();
        let (_, ctx, plan) = prepared(&sym, "E(x,y)", None);
        assert_eq!(denotation(&plan, &sym, &ctx), vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 1]]);
        assert!(plan.dump().starts_with("plan k=2 r=2 typing_radius=3 entries="));
    }

    #[test]
    fn radii() {
        let s = path3();
        let f = parse_formula("E(x,y)", s.signature()).unwrap();
        // |phi| = 1: r = 2, clamped to |domain| = 3
        let r = effective_radii(&f, 100, None).unwrap();
        assert_eq!((r.r, r.typing), (2, 5));
        let r = effective_radii(&f, 3, None).unwrap();
        assert_eq!((r.r, r.typing), (2, 3));
        let r = effective_radii(&f, 100, Some(1)).unwrap();
        assert_eq!((r.r, r.typing), (1, 2));
        let g = parse_formula("E(x,y) & E(y,z)", s.signature()).unwrap();
        let r = effective_radii(&g, 100, Some(1)).unwrap();
        assert_eq!((r.r, r.typing), (1, 4));
    }

    #[test]
    fn plan_dump_format() {
        let s = path3();
        let (_, _, plan) = prepared(&s, "E(x,y)", Some(1));
        let dump = plan.dump();
        assert!(dump.starts_with("plan k=2 r=1 typing_radius=2 entries="));
        assert!(dump.contains("entry 0 {x,y}@x F=("));
        assert_eq!(dump, prepared(&s, "E(x,y)", Some(1)).2.dump());
    }

    pub(crate) fn random_graph(n: usize, edges: &[(u32, u32)], unary: &[u32], symmetric: bool) -> Structure {
        let sig = Signature::from_relations([("E", 2), ("P", 1)]).unwrap();
        let mut b = StructureBuilder::new(sig).with_elements(n);
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            let (u, v) = (u % n as u32, v % n as u32);
            // keep the Gaifman degree at most 3
            if u != v && (deg[u as usize] >= 3 || deg[v as usize] >= 3) {
                continue;
            }
            if u != v {
                deg[u as usize] += 1;
                deg[v as usize] += 1;
            }
            b.add_fact(0, &[u, v]);
            if symmetric {
                b.add_fact(0, &[v, u]);
            }
        }
        for &p in unary {
            b.add_fact(1, &[p % n as u32]);
        }
        b.build()
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn graph() -> impl Strategy<Value = Structure> {
            (1usize..10, prop::collection::vec((0u32..10, 0u32..10), 0..14), prop::collection::vec(0u32..10, 0..3), any::<bool>())
                .prop_map(|(n, e, u, sym)| random_graph(n, &e, &u, sym))
        }

        const QUERIES: [&str; 6] = [
            "E(x,y)",
            "!E(x,y) & !(x = y)",
            "E(x,y) | P(y)",
            "P(x) & !(x = y) & !E(y,x)",
            "exists z (E(x,z) & E(z,y))",
            "x = y | E(y,x)",
        ];

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn exactly_one_partition_per_answer(s in graph(), qi in 0usize..6, r in 1u64..3) {
                let q = QUERIES[qi];
                let r = if qi == 4 { 2 } else { r };
                let (f, ctx, _) = prepared(&s, q, Some(r));
                let parts = enumerate_partitions(&f, &ctx.types);
                for t in brute_enumerate(&s, &f) {
                    let hits = parts.iter().filter(|p| div_holds(&t, p, &ctx.index, &ctx.types, ctx.radii.r)).count();
                    prop_assert_eq!(hits, 1, "tuple {:?}", t);
                }
            }

            #[test]
            fn plan_denotation_matches_oracle(s in graph(), qi in 0usize..6, r in 1u64..3) {
                let q = QUERIES[qi];
                let r = if qi == 4 { 2 } else { r };
                let (f, ctx, plan) = prepared(&s, q, Some(r));
                prop_assert_eq!(denotation(&plan, &s, &ctx), brute_enumerate(&s, &f));
                for e in &plan.entries {
                    prop_assert!(!e.sequences.is_empty());
                    for seq in &e.sequences {
                        prop_assert!(seq.iter().all(|&t| !ctx.types.bucket(t).is_empty()));
                    }
                }
            }
        }
    }
}
