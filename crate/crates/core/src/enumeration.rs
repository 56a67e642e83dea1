//! Enumeration phase: nested streams over type buckets, merged in
//! lexicographic order.
//!
//! Every (plan entry, type sequence) pair yields answers whose class centers
//! range over the buckets of the sequence's types. Classes whose bucket can
//! run out of non-conflicting candidates are pinned during preparation: all
//! their center combinations are computed up front and each combination gets
//! its own stream. The remaining classes always have a candidate that is far
//! enough from everything else, so a stream never walks into a dead end.
//!
//! Work is measured in probe steps: one per bucket advance, one per
//! class-against-class separation check and one per merge comparison.

use std::sync::Arc;

use crate::decomposition::{build_context, build_plan_with, class_patterns, place, ClassPattern, Context, DecompositionPlan, Patterns, PreprocessCounts};
use crate::error::{EnumError, Error, Result};
use crate::evaluator::Evaluator;
use crate::formula::{parse_formula, Formula};
use crate::structure::{check_degree_bound, gaifman_graph, Elem, Structure};

/// A family of strictly increasing tuple streams, addressed by index.
pub trait SortedStreams {
    fn count(&self) -> usize;
    /// Moves stream `i` to its next tuple; false once it is exhausted.
    fn advance(&mut self, i: usize) -> bool;
    fn head(&self, i: usize) -> &[Elem];
}

/// Ordered merge with duplicate suppression over a fixed set of streams.
#[derive(Debug, Clone)]
pub struct Merge {
    capacity: usize,
    active: Vec<u32>,
    tied: Vec<u32>,
    out: Vec<Elem>,
    started: bool,
    dedup: bool,
    comparisons: u64,
    last_comparisons: u64,
    monotonicity_checks: u64,
}

impl Merge {
    pub fn new(streams: usize, dedup: bool) -> Self {
        Merge {
            capacity: streams,
            active: Vec::with_capacity(streams),
            tied: Vec::with_capacity(streams),
            out: Vec::new(),
            started: false,
            dedup,
            comparisons: 0,
            last_comparisons: 0,
            monotonicity_checks: 0,
        }
    }

    /// Finds the next tuple; it is then available from [`Merge::current`].
    pub fn next<S: SortedStreams>(&mut self, set: &mut S) -> Result<bool, EnumError> {
        debug_assert_eq!(set.count(), self.capacity);
        if !self.started {
            self.started = true;
            for i in 0..set.count() {
                if set.advance(i) {
                    self.active.push(i as u32);
                }
            }
        } else {
            for ti in 0..self.tied.len() {
                let i = self.tied[ti] as usize;
                if set.advance(i) {
                    self.monotonicity_checks += 1;
                    if set.head(i) <= &self.out[..] {
                        return Err(EnumError::NonMonotone { stream: i });
                    }
                } else {
                    let at = self.active.iter().position(|&a| a as usize == i).expect("tied stream is active");
                    self.active.swap_remove(at);
                }
            }
            self.tied.clear();
        }
        self.last_comparisons = 0;
        let Some(&first) = self.active.first() else {
            return Ok(false);
        };
        let mut min = first as usize;
        self.tied.push(first);
        for ai in 1..self.active.len() {
            let i = self.active[ai] as usize;
            self.last_comparisons += 1;
            match set.head(i).cmp(set.head(min)) {
                std::cmp::Ordering::Less => {
                    min = i;
                    self.tied.clear();
                    self.tied.push(i as u32);
                }
                std::cmp::Ordering::Equal if self.dedup => self.tied.push(i as u32),
                _ => {}
            }
        }
        self.comparisons += self.last_comparisons;
        self.out.clear();
        self.out.extend_from_slice(set.head(min));
        Ok(true)
    }

    pub fn current(&self) -> &[Elem] {
        &self.out
    }

    /// Comparisons spent on the most recent call to `next`.
    pub fn last_comparisons(&self) -> u64 {
        self.last_comparisons
    }

    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn monotonicity_checks(&self) -> u64 {
        self.monotonicity_checks
    }

    fn write_state(&self, out: &mut Vec<u8>) {
        for slots in [&self.active, &self.tied] {
            for i in 0..self.capacity {
                out.extend_from_slice(&slots.get(i).copied().unwrap_or(u32::MAX).to_le_bytes());
            }
        }
        for e in &self.out {
            out.extend_from_slice(&e.to_le_bytes());
        }
        out.push(self.started as u8);
        out.push(self.dedup as u8);
        out.extend_from_slice(&self.comparisons.to_le_bytes());
        out.extend_from_slice(&self.last_comparisons.to_le_bytes());
        out.extend_from_slice(&self.monotonicity_checks.to_le_bytes());
    }
}

/// In-memory streams, mostly for tests and tools.
#[derive(Debug, Clone)]
pub struct VecStreams {
    streams: Vec<Vec<Vec<Elem>>>,
    consumed: Vec<usize>,
}

impl VecStreams {
    pub fn new(streams: Vec<Vec<Vec<Elem>>>) -> Self {
        let consumed = vec![0; streams.len()];
        VecStreams { streams, consumed }
    }
}

impl SortedStreams for VecStreams {
    fn count(&self) -> usize {
        self.streams.len()
    }

    fn advance(&mut self, i: usize) -> bool {
        if self.consumed[i] < self.streams[i].len() {
            self.consumed[i] += 1;
            true
        } else {
            false
        }
    }

    fn head(&self, i: usize) -> &[Elem] {
        &self.streams[i][self.consumed[i] - 1]
    }
}

/// Sorted, deduplicated union of strictly increasing streams.
pub fn merge_streams(streams: Vec<Vec<Vec<Elem>>>) -> Result<Vec<Vec<Elem>>, EnumError> {
    let mut set = VecStreams::new(streams);
    let mut m = Merge::new(set.count(), true);
    let mut out = Vec::new();
    while m.next(&mut set)? {
        out.push(m.current().to_vec());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum StreamSpec {
    /// Fully pinned: precomputed tuples, flattened and sorted.
    List { tuples: Vec<Elem> },
    /// Centers of `levels` range over their buckets; the rest are fixed.
    Nested { classes: Vec<ClassPattern>, pinned: Vec<Option<Elem>>, levels: Vec<usize> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrepareOptions {
    pub radius: Option<u64>,
    pub degree_bound: Option<usize>,
}

/// Everything the enumeration phase needs, built once per query and structure.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    structure: Arc<Structure>,
    formula: Formula,
    ctx: Option<Context>,
    plan: Option<DecompositionPlan>,
    streams: Vec<StreamSpec>,
    sentence: Option<bool>,
    counts: PreprocessCounts,
    delay_bound: u64,
}

impl PreparedQuery {
    pub fn parse(structure: Arc<Structure>, query: &str, opts: PrepareOptions) -> Result<Self> {
        let f = parse_formula(query, structure.signature())?;
        Self::new(structure, f, opts)
    }

    pub fn new(structure: Arc<Structure>, formula: Formula, opts: PrepareOptions) -> Result<Self> {
        let s = &*structure;
        if let Some(d) = opts.degree_bound {
            let g = gaifman_graph(s);
            if !check_degree_bound(&g, d) {
                return Err(Error::DegreeBound { bound: d, found: g.max_degree() });
            }
        }
        // the radius rule is enforced even when the plan is not needed
        crate::formula::locality_radius(&formula, opts.radius)?;
        if formula.is_sentence() {
            let mut ev = Evaluator::new(s, &formula);
            let holds = ev.holds(&[]);
            let counts = PreprocessCounts { evaluation: ev.steps(), ..Default::default() };
            return Ok(PreparedQuery {
                structure,
                formula,
                ctx: None,
                plan: None,
                streams: Vec::new(),
                sentence: Some(holds),
                counts,
                delay_bound: 1,
            });
        }
        let mut ctx = build_context(s, &formula, opts.radius)?;
        let plan = build_plan_with(&formula, s, &mut ctx)?;
        let (streams, per_stream, pinning) = layout(&ctx, &plan);
        ctx.counts.pinning += pinning;
        let m = formula.k() as u64;
        let worst = per_stream.iter().copied().max().unwrap_or(0);
        let delay_bound = streams.len() as u64 * (1 + 2 * m * worst) + 1;
        let counts = ctx.counts;
        Ok(PreparedQuery {
            structure,
            formula,
            ctx: Some(ctx),
            plan: Some(plan),
            streams,
            sentence: None,
            counts,
            delay_bound,
        })
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn k(&self) -> usize {
        self.formula.k()
    }

    /// `None` for sentences.
    pub fn plan(&self) -> Option<&DecompositionPlan> {
        self.plan.as_ref()
    }

    pub fn context(&self) -> Option<&Context> {
        self.ctx.as_ref()
    }

    pub fn stream_count(&self) -> usize {
        self.streams.len()
    }

    pub fn preprocess_counts(&self) -> PreprocessCounts {
        self.counts
    }

    pub fn preprocess_steps(&self) -> u64 {
        self.counts.total()
    }

    /// Upper bound on probe steps between consecutive emissions, derived
    /// from the stream layout.
    pub fn delay_bound(&self) -> u64 {
        self.delay_bound
    }

    pub fn new_state(&self) -> CursorState {
        CursorState {
            streams: self
                .streams
                .iter()
                .map(|s| StreamCursor {
                    pos: vec![0; match s {
                        StreamSpec::List { .. } => 1,
                        StreamSpec::Nested { classes, .. } => classes.len(),
                    }],
                    head: vec![0; self.k()],
                    started: false,
                })
                .collect(),
            merge: Merge { out: vec![0; self.k()], ..Merge::new(self.streams.len(), true) },
            steps_since: 0,
            max_delay: 0,
            total_delay: 0,
            emitted: 0,
            tail: 0,
            touched: false,
            exhausted: false,
        }
    }

    pub fn open_cursor(&self) -> EnumerationCursor<'_> {
        EnumerationCursor { prep: self, state: self.new_state() }
    }

    /// All answers, in order.
    pub fn answers(&self) -> Result<Vec<Vec<Elem>>, EnumError> {
        let mut c = self.open_cursor();
        let mut out = Vec::new();
        while let Some(t) = c.next_answer()? {
            out.push(t.to_vec());
        }
        Ok(out)
    }
}

/// Streams for every (entry, sequence) pair, per stream the sum of `T + 1`
/// over its free levels, and the work spent on pinned classes.
fn layout(ctx: &Context, plan: &DecompositionPlan) -> (Vec<StreamSpec>, Vec<u64>, u64) {
    let pats = Patterns::new(&ctx.types, ctx.radii.r);
    let k = plan.k();
    let mut streams = Vec::new();
    let mut weights = Vec::new();
    let mut steps = 0u64;
    for entry in &plan.entries {
        for seq in &entry.sequences {
            let cps = class_patterns(ctx, &pats, &entry.partition.classes, seq);
            let small: Vec<usize> = (0..cps.len()).filter(|&j| !cps[j].large).collect();
            let levels: Vec<usize> = (0..cps.len()).filter(|&j| cps[j].large).collect();
            let combos = pinned_combinations(ctx, &cps, &small, k, &mut steps);
            if levels.is_empty() {
                let mut tuples: Vec<Vec<Elem>> = combos
                    .iter()
                    .map(|centers| {
                        let mut t = vec![0; k];
                        for (&j, &c) in small.iter().zip(centers) {
                            place(ctx, &cps[j], c, &mut t);
                        }
                        t
                    })
                    .collect();
                tuples.sort();
                if !tuples.is_empty() {
                    streams.push(StreamSpec::List { tuples: tuples.concat() });
                    weights.push(1);
                }
                continue;
            }
            let weight: u64 = levels.iter().map(|&j| cps[j].conflict_bound as u64 + 1).sum();
            for centers in combos {
                let mut pinned = vec![None; cps.len()];
                for (&j, &c) in small.iter().zip(&centers) {
                    pinned[j] = Some(c);
                }
                streams.push(StreamSpec::Nested { classes: cps.clone(), pinned, levels: levels.clone() });
                weights.push(weight);
            }
        }
    }
    (streams, weights, steps)
}

/// Pairwise separated center choices for the classes in `small`, in class order.
fn pinned_combinations(ctx: &Context, cps: &[ClassPattern], small: &[usize], k: usize, steps: &mut u64) -> Vec<Vec<Elem>> {
    let mut out = Vec::new();
    let mut t = vec![0 as Elem; k];
    let mut chosen = Vec::with_capacity(small.len());
    #[allow(clippy::too_many_arguments)]
    fn rec(
        ctx: &Context,
        cps: &[ClassPattern],
        small: &[usize],
        level: usize,
        t: &mut Vec<Elem>,
        chosen: &mut Vec<Elem>,
        out: &mut Vec<Vec<Elem>>,
        steps: &mut u64,
    ) {
        if level == small.len() {
            out.push(chosen.clone());
            return;
        }
        let pat = &cps[small[level]];
        for &c in ctx.types.bucket(pat.ty) {
            let earlier = &small[..level];
            *steps += 1 + earlier.len() as u64;
            if earlier.iter().any(|&i| clashes(ctx, pat, c, t, &cps[i].vars)) {
                continue;
            }
            place(ctx, pat, c, t);
            chosen.push(c);
            rec(ctx, cps, small, level + 1, t, chosen, out, steps);
            chosen.pop();
        }
    }
    rec(ctx, cps, small, 0, &mut t, &mut chosen, &mut out, steps);
    out
}

/// Whether the class placed at `c` comes within `2r` of the components of
/// `head` at `other`.
fn clashes(ctx: &Context, pat: &ClassPattern, c: Elem, head: &[Elem], other: &[usize]) -> bool {
    let two_r = 2 * ctx.radii.r;
    let ptrs = ctx.types.pointers(c);
    std::iter::once(c)
        .chain(pat.f.iter().map(|&p| ptrs[p as usize]))
        .any(|a| other.iter().any(|&v| ctx.index.within(a, head[v], two_r)))
}

#[derive(Debug, Clone)]
struct StreamCursor {
    /// Bucket position per class (list index for list streams).
    pos: Vec<u32>,
    head: Vec<Elem>,
    started: bool,
}

/// Mutable enumeration state, kept apart from the prepared query so it can be
/// owned independently.
#[derive(Debug, Clone)]
pub struct CursorState {
    streams: Vec<StreamCursor>,
    merge: Merge,
    steps_since: u64,
    max_delay: u64,
    total_delay: u64,
    emitted: u64,
    tail: u64,
    touched: bool,
    exhausted: bool,
}

struct Live<'a> {
    prep: &'a PreparedQuery,
    streams: &'a mut [StreamCursor],
    steps: &'a mut u64,
}

impl SortedStreams for Live<'_> {
    fn count(&self) -> usize {
        self.streams.len()
    }

    fn advance(&mut self, i: usize) -> bool {
        let ctx = self.prep.ctx.as_ref().expect("streams need a context");
        let cur = &mut self.streams[i];
        match &self.prep.streams[i] {
            StreamSpec::List { tuples } => {
                let k = cur.head.len();
                *self.steps += 1;
                let idx = if cur.started { cur.pos[0] as usize + 1 } else { 0 };
                cur.started = true;
                if (idx + 1) * k > tuples.len() {
                    return false;
                }
                cur.pos[0] = idx as u32;
                cur.head.copy_from_slice(&tuples[idx * k..(idx + 1) * k]);
                true
            }
            StreamSpec::Nested { classes, pinned, levels } => {
                advance_nested(ctx, classes, pinned, levels, cur, self.steps)
            }
        }
    }

    fn head(&self, i: usize) -> &[Elem] {
        &self.streams[i].head
    }
}

fn advance_nested(
    ctx: &Context,
    classes: &[ClassPattern],
    pinned: &[Option<Elem>],
    levels: &[usize],
    cur: &mut StreamCursor,
    steps: &mut u64,
) -> bool {
    let (mut lvl, mut from) = if cur.started {
        let last = levels.len() - 1;
        (last, cur.pos[levels[last]] as usize + 1)
    } else {
        cur.started = true;
        for (j, p) in pinned.iter().enumerate() {
            if let Some(c) = *p {
                place(ctx, &classes[j], c, &mut cur.head);
            }
        }
        (0, 0)
    };
    loop {
        let j = levels[lvl];
        let pat = &classes[j];
        let bucket = ctx.types.bucket(pat.ty);
        let mut found = None;
        let mut p = from;
        while p < bucket.len() {
            let c = bucket[p];
            *steps += 1;
            let mut ok = true;
            for (i, other) in classes.iter().enumerate() {
                let fixed = pinned[i].is_some() || levels[..lvl].contains(&i);
                if i == j || !fixed {
                    continue;
                }
                *steps += 1;
                if clashes(ctx, pat, c, &cur.head, &other.vars) {
                    ok = false;
                    break;
                }
            }
            if ok {
                found = Some(p);
                break;
            }
            p += 1;
        }
        match found {
            Some(p) => {
                cur.pos[j] = p as u32;
                place(ctx, pat, bucket[p], &mut cur.head);
                if lvl + 1 == levels.len() {
                    return true;
                }
                lvl += 1;
                from = 0;
            }
            None => {
                if lvl == 0 {
                    return false;
                }
                lvl -= 1;
                from = cur.pos[levels[lvl]] as usize + 1;
            }
        }
    }
}

/// Per-emission probe-step statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayStats {
    pub max_steps: u64,
    pub mean_steps: f64,
    pub preprocess_steps: u64,
    pub emitted: u64,
    /// Steps after the last emission, spent discovering exhaustion.
    pub tail_steps: u64,
    pub delay_bound: u64,
}

impl CursorState {
    /// Turns duplicate suppression off; only meaningful before the first call.
    pub fn set_dedup(&mut self, on: bool) {
        self.merge.dedup = on;
    }

    /// The next answer, or `None` once every stream is exhausted. `prep`
    /// must be the query this state was created for.
    pub fn next_answer<'s>(&'s mut self, prep: &PreparedQuery) -> Result<Option<&'s [Elem]>, EnumError> {
        self.touched = true;
        if self.exhausted {
            return Ok(None);
        }
        if let Some(holds) = prep.sentence {
            self.steps_since += 1;
            if holds && self.emitted == 0 {
                self.record_emission();
                return Ok(Some(&[]));
            }
            self.finish();
            return Ok(None);
        }
        let mut live = Live { prep, streams: &mut self.streams, steps: &mut self.steps_since };
        let more = self.merge.next(&mut live)?;
        self.steps_since += self.merge.last_comparisons();
        if !more {
            self.finish();
            return Ok(None);
        }
        self.record_emission();
        Ok(Some(self.merge.current()))
    }

    fn record_emission(&mut self) {
        self.max_delay = self.max_delay.max(self.steps_since);
        self.total_delay += self.steps_since;
        self.emitted += 1;
        self.steps_since = 0;
    }

    fn finish(&mut self) {
        self.exhausted = true;
        self.tail = self.steps_since;
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn delay_stats(&self, prep: &PreparedQuery) -> Result<DelayStats, EnumError> {
        if !self.touched {
            return Err(EnumError::NoActivity);
        }
        let mean = if self.emitted == 0 { 0.0 } else { self.total_delay as f64 / self.emitted as f64 };
        Ok(DelayStats {
            max_steps: self.max_delay,
            mean_steps: mean,
            preprocess_steps: prep.preprocess_steps(),
            emitted: self.emitted,
            tail_steps: if self.exhausted { self.tail } else { self.steps_since },
            delay_bound: prep.delay_bound,
        })
    }

    /// Byte serialization of the whole auxiliary state.
    pub fn state_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for s in &self.streams {
            for p in &s.pos {
                out.extend_from_slice(&p.to_le_bytes());
            }
            for e in &s.head {
                out.extend_from_slice(&e.to_le_bytes());
            }
            out.push(s.started as u8);
        }
        self.merge.write_state(&mut out);
        for v in [self.steps_since, self.max_delay, self.total_delay, self.emitted, self.tail] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.touched as u8);
        out.push(self.exhausted as u8);
        out
    }
}

/// A cursor borrowing its prepared query.
pub struct EnumerationCursor<'a> {
    prep: &'a PreparedQuery,
    state: CursorState,
}

impl<'a> EnumerationCursor<'a> {
    pub fn next_answer(&mut self) -> Result<Option<&[Elem]>, EnumError> {
        self.state.next_answer(self.prep)
    }

    pub fn delay_stats(&self) -> Result<DelayStats, EnumError> {
        self.state.delay_stats(self.prep)
    }

    pub fn state(&self) -> &CursorState {
        &self.state
    }

    pub fn set_dedup(&mut self, on: bool) {
        self.state.set_dedup(on);
    }
}
