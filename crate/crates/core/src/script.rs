//! Text workloads: parsing, generation and execution.
//!
//! ```text
//! dims <d> <w>
//! add <id> <t_start> <t_end|inf> <x1> .. <xd>
//! remove <id>
//! range <t> <r> <eps> <x1> .. <xd>
//! ann <t> <eps> <x1> .. <xd>
//! empty <t> <r> <eps> <x1> .. <xd>
//! ```
//!
//! `#` starts a comment. Coordinates are reals in `[0, 1)`.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::NaiveTimeline;
use crate::probe::Probe;
use crate::spatial::RetroPointSet;
use crate::zorder::{Grid, MAX_DIM};

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Add { id: u64, start: i64, end: Option<i64>, x: Vec<f64> },
    Remove { id: u64 },
    Range { t: i64, r: f64, eps: f64, x: Vec<f64> },
    Ann { t: i64, eps: f64, x: Vec<f64> },
    Empty { t: i64, r: f64, eps: f64, x: Vec<f64> },
}

impl Command {
    pub fn is_query(&self) -> bool {
        matches!(self, Command::Range { .. } | Command::Ann { .. } | Command::Empty { .. })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let xs = |x: &[f64]| x.iter().map(|v| format!(" {v:?}")).collect::<String>();
        match self {
            Command::Add { id, start, end, x } => match end {
                Some(e) => write!(f, "add {id} {start} {e}{}", xs(x)),
                None => write!(f, "add {id} {start} inf{}", xs(x)),
            },
            Command::Remove { id } => write!(f, "remove {id}"),
            Command::Range { t, r, eps, x } => write!(f, "range {t} {r:?} {eps:?}{}", xs(x)),
            Command::Ann { t, eps, x } => write!(f, "ann {t} {eps:?}{}", xs(x)),
            Command::Empty { t, r, eps, x } => write!(f, "empty {t} {r:?} {eps:?}{}", xs(x)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WorkloadScript {
    /// `(d, w)`; absent only for a script without commands.
    pub dims: Option<(usize, u32)>,
    /// Commands with their 1-based source line.
    pub commands: Vec<(usize, Command)>,
}

impl fmt::Display for WorkloadScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((d, w)) = self.dims {
            writeln!(f, "dims {d} {w}")?;
        }
        for (_, c) in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Tokens<'a> {
        let mut items = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    items.push((s, &text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        Tokens { line, items, pos: 0 }
    }

    fn err_at(&self, idx: usize, msg: impl Into<String>) -> ParseError {
        let col = self.items.get(idx).map_or_else(|| self.items.last().map_or(1, |(c, s)| c + s.len() + 1), |(c, _)| c + 1);
        ParseError { line: self.line, col, msg: msg.into() }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let i = self.pos;
        match self.items.get(i) {
            Some(&(_, s)) => {
                self.pos += 1;
                Ok((i, s))
            }
            None => Err(self.err_at(i, format!("expected {what}"))),
        }
    }

    fn int<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ParseError> {
        let (i, s) = self.next(what)?;
        s.parse().map_err(|_| self.err_at(i, format!("bad {what} `{s}`")))
    }

    fn real(&mut self, what: &str) -> Result<(usize, f64), ParseError> {
        let (i, s) = self.next(what)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((i, v)),
            _ => Err(self.err_at(i, format!("bad {what} `{s}`"))),
        }
    }

    fn positive(&mut self, what: &str) -> Result<f64, ParseError> {
        let (i, v) = self.real(what)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err_at(i, format!("{what} must be positive")))
        }
    }

    fn coords(&mut self, d: usize) -> Result<Vec<f64>, ParseError> {
        (0..d)
            .map(|_| {
                let (i, v) = self.real("coordinate")?;
                if (0.0..1.0).contains(&v) {
                    Ok(v)
                } else {
                    Err(self.err_at(i, format!("coordinate {v} outside [0, 1)")))
                }
            })
            .collect()
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.items.get(self.pos) {
            Some(_) => Err(self.err_at(self.pos, "trailing input")),
            None => Ok(()),
        }
    }
}

/// Parse a workload, reporting the first error with its position.
pub fn parse_workload(text: &str) -> Result<WorkloadScript, ParseError> {
    let mut script = WorkloadScript::default();
    let mut live: HashSet<u64> = HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut tk = Tokens::new(line, body);
        if tk.items.is_empty() {
            continue;
        }
        let (ci, cmd) = tk.next("command")?;
        let Some((d, _)) = script.dims else {
            if cmd != "dims" {
                return Err(tk.err_at(ci, "expected `dims <d> <w>` first"));
            }
            let d: usize = tk.int("dimension")?;
            let w: u32 = tk.int("bit width")?;
            if Grid::new(d, w).is_err() {
                return Err(tk.err_at(1, format!("unsupported dims {d} {w} (d in 1..={MAX_DIM}, w in 1..=31)")));
            }
            tk.finish()?;
            script.dims = Some((d, w));
            continue;
        };
        let c = match cmd {
            "add" => {
                let ii = tk.pos;
                let id: u64 = tk.int("id")?;
                let start: i64 = tk.int("start time")?;
                let (ei, es) = tk.next("end time")?;
                let end = if es == "inf" {
                    None
                } else {
                    let e: i64 = es.parse().map_err(|_| tk.err_at(ei, format!("bad end time `{es}`")))?;
                    if e <= start {
                        return Err(tk.err_at(ei, "end time must exceed start time"));
                    }
                    Some(e)
                };
                let x = tk.coords(d)?;
                if !live.insert(id) {
                    return Err(tk.err_at(ii, format!("duplicate id {id}")));
                }
                Command::Add { id, start, end, x }
            }
            "remove" => {
                let ii = tk.pos;
                let id: u64 = tk.int("id")?;
                if !live.remove(&id) {
                    return Err(tk.err_at(ii, format!("unknown id {id}")));
                }
                Command::Remove { id }
            }
            "range" => Command::Range { t: tk.int("time")?, r: tk.positive("radius")?, eps: tk.positive("eps")?, x: tk.coords(d)? },
            "ann" => Command::Ann { t: tk.int("time")?, eps: tk.positive("eps")?, x: tk.coords(d)? },
            "empty" => Command::Empty { t: tk.int("time")?, r: tk.positive("radius")?, eps: tk.positive("eps")?, x: tk.coords(d)? },
            "dims" => return Err(tk.err_at(ci, "dims given twice")),
            other => return Err(tk.err_at(ci, format!("unknown command `{other}`"))),
        };
        tk.finish()?;
        script.commands.push((line, c));
    }
    Ok(script)
}

/// Shape of a synthesized workload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub q: usize,
    pub d: usize,
}

impl std::str::FromStr for GenSpec {
    type Err = String;

    /// `n=<N>,q=<Q>,d=<D>` in any order; missing keys default to 1000, 100, 2.
    fn from_str(s: &str) -> Result<GenSpec, String> {
        let mut g = GenSpec { n: 1000, q: 100, d: 2 };
        for part in s.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let v: usize = v.trim().parse().map_err(|_| format!("bad value in `{part}`"))?;
            match k.trim() {
                "n" => g.n = v,
                "q" => g.q = v,
                "d" => g.d = v,
                _ => return Err(format!("unknown key `{k}`")),
            }
        }
        if !(1..=MAX_DIM).contains(&g.d) {
            return Err(format!("d must be in 1..={MAX_DIM}"));
        }
        Ok(g)
    }
}

/// Bits per axis for synthesized workloads.
pub const GEN_BITS: u32 = 16;
const EPS_CHOICES: [f64; 3] = [0.1, 0.5, 1.0];

fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(0..1u32 << GEN_BITS) as f64 / (1u64 << GEN_BITS) as f64).collect()
}

/// A random workload: `n` lifespans, about a tenth later retracted, and `q`
/// queries interleaved with the updates.
pub fn generate(spec: GenSpec, seed: u64) -> WorkloadScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = (spec.n as i64).max(8) * 2;
    let mut cmds = Vec::new();
    let mut live: Vec<u64> = Vec::new();
    let total = spec.n + spec.q;
    let (mut adds, mut queries) = (0, 0);
    for _ in 0..total {
        let want_add = adds < spec.n && (queries >= spec.q || rng.gen_range(0..total) < spec.n);
        if want_add {
            adds += 1;
            let id = adds as u64;
            let start = rng.gen_range(0..horizon);
            let end = if rng.gen_bool(0.1) { None } else { Some(start + rng.gen_range(1..=horizon / 2)) };
            cmds.push(Command::Add { id, start, end, x: unit(&mut rng, spec.d) });
            live.push(id);
            if live.len() > 1 && rng.gen_bool(0.1) {
                let i = rng.gen_range(0..live.len());
                cmds.push(Command::Remove { id: live.swap_remove(i) });
            }
        } else {
            queries += 1;
            let t = rng.gen_range(-1..=horizon + 1);
            let eps = EPS_CHOICES[rng.gen_range(0..EPS_CHOICES.len())];
            let x = unit(&mut rng, spec.d);
            let r = rng.gen_range(0.01..0.3);
            cmds.push(match rng.gen_range(0..3) {
                0 => Command::Range { t, r, eps, x },
                1 => Command::Ann { t, eps, x },
                _ => Command::Empty { t, r, eps, x },
            });
        }
    }
    WorkloadScript { dims: Some((spec.d, GEN_BITS)), commands: cmds.into_iter().map(|c| (0, c)).collect() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exec,
    Verify,
    Bench,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "exec" => Ok(Mode::Exec),
            "verify" => Ok(Mode::Verify),
            "bench" => Ok(Mode::Bench),
            _ => Err(format!("unknown mode `{s}` (exec, verify, bench)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub output: String,
    /// False when some verification check or the final audit failed.
    pub ok: bool,
}

/// Mean work counters of one workload run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OpMeans {
    /// Lifespans added.
    pub n: usize,
    pub add: f64,
    pub remove: f64,
    /// Range cost with the output size subtracted.
    pub range: f64,
    pub ann: f64,
    pub empty: f64,
    pub catalog: usize,
}

#[derive(Default)]
struct Acc {
    sum: u64,
    count: u64,
}

impl Acc {
    fn push(&mut self, v: u64) {
        self.sum += v;
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }
}

struct Runner {
    set: RetroPointSet,
    oracle: NaiveTimeline,
    /// script id to structure handle and back
    handle_of: HashMap<u64, u64>,
    id_of: HashMap<u64, u64>,
}

impl Runner {
    fn new(d: usize, w: u32, seed: u64) -> Runner {
        Runner {
            set: RetroPointSet::new(d, w, seed).expect("dims validated by the parser"),
            oracle: NaiveTimeline::new(w),
            handle_of: HashMap::new(),
            id_of: HashMap::new(),
        }
    }

    fn ids(&self, hits: impl IntoIterator<Item = u64>) -> String {
        let mut ids: Vec<u64> = hits.into_iter().map(|h| self.id_of[&h]).collect();
        ids.sort_unstable();
        if ids.is_empty() {
            "-".to_string()
        } else {
            ids.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
        }
    }
}

/// Run a parsed script. `seed` drives the quadtree's level sampling.
pub fn run(script: &WorkloadScript, mode: Mode, seed: u64) -> Report {
    let Some((d, w)) = script.dims else {
        return Report { output: String::new(), ok: true };
    };
    if mode == Mode::Bench {
        let m = measure(script, seed);
        return Report { output: bench_csv(&[m]), ok: true };
    }
    let mut rn = Runner::new(d, w, seed);
    let mut out = String::new();
    let mut ok = true;
    let verify = mode == Mode::Verify;
    for (line, cmd) in &script.commands {
        let q = |x: &[f64]| rn.set.grid().quantize(x).expect("coordinates validated by the parser");
        match cmd {
            Command::Add { id, start, end, x } => {
                let p = q(x);
                let h = rn.set.add_lifespan(p, *start, *end).expect("lifespan validated by the parser");
                rn.oracle.add(h, p, *start, *end);
                rn.handle_of.insert(*id, h);
                rn.id_of.insert(h, *id);
            }
            Command::Remove { id } => {
                let h = rn.handle_of.remove(id).expect("ids validated by the parser");
                rn.set.remove_lifespan(h).expect("live handle");
                rn.oracle.remove(h);
                rn.id_of.remove(&h);
            }
            Command::Range { t, r, eps, x } => {
                let p = q(x);
                let got = rn.set.range_report(&p, *r, *eps, *t).expect("valid query");
                if verify {
                    ok &= verdict(&mut out, *line, "range", rn.oracle.check_range(&p, *r, *eps, *t, &got));
                } else {
                    let _ = writeln!(out, "{}", rn.ids(got.iter().map(|&(_, h)| h)));
                }
            }
            Command::Ann { t, eps, x } => {
                let p = q(x);
                let got = rn.set.ann(&p, *eps, *t).expect("valid query");
                if verify {
                    ok &= verdict(&mut out, *line, "ann", rn.oracle.check_ann(&p, *eps, *t, got));
                } else {
                    let _ = writeln!(out, "{}", rn.ids(got.map(|(_, h)| h)));
                }
            }
            Command::Empty { t, r, eps, x } => {
                let p = q(x);
                let got = rn.set.spherical_empty(&p, *r, *eps, *t).expect("valid query");
                if verify {
                    ok &= verdict(&mut out, *line, "empty", rn.oracle.check_empty(&p, *r, *eps, *t, got));
                } else {
                    let _ = writeln!(out, "{}", rn.ids(got.map(|(_, h)| h)));
                }
            }
        }
    }
    if verify {
        if let Err(e) = rn.set.audit() {
            let _ = writeln!(out, "FAIL audit: {e}");
            ok = false;
        }
    }
    Report { output: out, ok }
}

fn verdict(out: &mut String, line: usize, kind: &str, r: Result<(), String>) -> bool {
    let at = if line > 0 { format!(" line {line}") } else { String::new() };
    match r {
        Ok(()) => {
            let _ = writeln!(out, "PASS {kind}{at}");
            true
        }
        Err(e) => {
            let _ = writeln!(out, "FAIL {kind}{at}: {e}");
            false
        }
    }
}

/// Run `script` while recording work counters per operation kind.
pub fn measure(script: &WorkloadScript, seed: u64) -> OpMeans {
    let Some((d, w)) = script.dims else { return OpMeans::default() };
    let mut rn = Runner::new(d, w, seed);
    let (mut add, mut remove, mut range, mut ann, mut empty) = Default::default();
    let mut adds = 0usize;
    for (_, cmd) in &script.commands {
        let mut probe = Probe::default();
        let q = |x: &[f64]| rn.set.grid().quantize(x).expect("coordinates validated by the parser");
        match cmd {
            Command::Add { id, start, end, x } => {
                let h = rn.set.add_lifespan_with(q(x), *start, *end, &mut probe).expect("validated");
                rn.handle_of.insert(*id, h);
                Acc::push(&mut add, probe.visited());
                adds += 1;
            }
            Command::Remove { id } => {
                let h = rn.handle_of.remove(id).expect("validated");
                rn.set.remove_lifespan_with(h, &mut probe).expect("live handle");
                Acc::push(&mut remove, probe.visited());
            }
            Command::Range { t, r, eps, x } => {
                rn.set.range_report_with(&q(x), *r, *eps, *t, &mut probe).expect("valid query");
                Acc::push(&mut range, probe.visited().saturating_sub(probe.reported));
            }
            Command::Ann { t, eps, x } => {
                rn.set.ann_with(&q(x), *eps, *t, &mut probe).expect("valid query");
                Acc::push(&mut ann, probe.visited());
            }
            Command::Empty { t, r, eps, x } => {
                rn.set.spherical_empty_with(&q(x), *r, *eps, *t, &mut probe).expect("valid query");
                Acc::push(&mut empty, probe.visited());
            }
        }
    }
    OpMeans {
        n: adds,
        add: add.mean(),
        remove: remove.mean(),
        range: range.mean(),
        ann: ann.mean(),
        empty: empty.mean(),
        catalog: rn.set.catalog_entries(),
    }
}

/// Workload for the scaling sweep: `n` lifespans inserted, then `q` queries
/// at the end of the timeline. Range radii shrink as `n^(-1/d)` so the
/// expected output size stays roughly constant.
pub fn sweep_workload(n: usize, q: usize, d: usize, seed: u64) -> WorkloadScript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).rotate_left(32));
    let horizon = (n as i64) * 2;
    let mut cmds = Vec::with_capacity(n + q);
    for id in 1..=n as u64 {
        let start = rng.gen_range(0..horizon);
        let end = if rng.gen_bool(0.1) { None } else { Some(start + rng.gen_range(1..=horizon / 2)) };
        cmds.push(Command::Add { id, start, end, x: unit(&mut rng, d) });
    }
    let r = 2.0 * (n as f64).powf(-1.0 / d as f64);
    for i in 0..q {
        let t = rng.gen_range(0..horizon);
        let x = unit(&mut rng, d);
        cmds.push(match i % 3 {
            0 => Command::Range { t, r, eps: 0.5, x },
            1 => Command::Ann { t, eps: 0.5, x },
            _ => Command::Empty { t, r, eps: 0.5, x },
        });
    }
    WorkloadScript { dims: Some((d, GEN_BITS)), commands: cmds.into_iter().map(|c| (0, c)).collect() }
}

/// CSV of per-op means; ratio columns compare each row with the previous.
pub fn bench_csv(rows: &[OpMeans]) -> String {
    let mut out = String::from("n,add,remove,range,ann,empty,catalog,add_ratio,range_ratio,ann_ratio,empty_ratio\n");
    let ratio = |a: f64, b: f64| if b > 0.0 { format!("{:.4}", a / b) } else { String::new() };
    for (i, m) in rows.iter().enumerate() {
        let _ = write!(out, "{},{:.3},{:.3},{:.3},{:.3},{:.3},{}", m.n, m.add, m.remove, m.range, m.ann, m.empty, m.catalog);
        match i.checked_sub(1).map(|j| rows[j]) {
            Some(p) => {
                let _ = writeln!(out, ",{},{},{},{}", ratio(m.add, p.add), ratio(m.range, p.range), ratio(m.ann, p.ann), ratio(m.empty, p.empty));
            }
            None => out.push_str(",,,,\n"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const INTRO: &str = "# the line example\ndims 1 4\nadd 1 1 inf 0.0625\nadd 4 4 inf 0.25\nadd 7 7 inf 0.4375\nadd 10 10 inf 0.625\nadd 13 13 inf 0.8125\nann 12 0.5 0.375\nadd 6 6 inf 0.375\nann 12 0.5 0.375\n";

    #[test]
    fn empty_file() {
        assert_eq!(parse_workload("").unwrap(), WorkloadScript::default());
        assert_eq!(parse_workload("# nothing\n\n").unwrap(), WorkloadScript::default());
        assert_eq!(run(&WorkloadScript::default(), Mode::Exec, 0).output, "");
    }

    #[test]
    fn grammar() {
        let s = parse_workload("dims 2 10\nadd 1 3 7 0.25 0.5\nremove 1 # gone\n").unwrap();
        assert_eq!(s.dims, Some((2, 10)));
        assert_eq!(s.commands[0], (2, Command::Add { id: 1, start: 3, end: Some(7), x: vec![0.25, 0.5] }));
        assert_eq!(s.commands[1], (3, Command::Remove { id: 1 }));
        let s = parse_workload("dims 1 8\nann 12 0.5 0.4").unwrap();
        assert_eq!(s.commands[0].1, Command::Ann { t: 12, eps: 0.5, x: vec![0.4] });
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = parse_workload("add 1 2 3 0.5").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        let e = parse_workload("dims 1 8\nadd 1 2 3 1.5").unwrap_err();
        assert_eq!((e.line, e.col), (2, 11));
        let e = parse_workload("dims 1 8\nadd 1 2 3 0.5\nadd 1 4 5 0.5").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.msg.contains("duplicate"));
        assert!(parse_workload("dims 1 8\nadd 1 2 3 0.5\nremove 1\nadd 1 4 5 0.5").is_ok());
        assert!(parse_workload("dims 1 8\nadd 1 5 5 0.5").is_err());
        assert!(parse_workload("dims 1 8\nrange 1 0 0.5 0.5").is_err());
        assert!(parse_workload("dims 1 8\nann 1 0.5 0.5 0.5").is_err());
        assert!(parse_workload("dims 1 8\nremove 4").is_err());
        assert!(parse_workload("dims 0 8").is_err());
        assert!(parse_workload("dims 1 8\nfoo").is_err());
    }

    #[test]
    fn adds_only_print_nothing() {
        let s = parse_workload("dims 2 8\nadd 1 0 inf 0.1 0.1\nadd 2 0 5 0.2 0.2\n").unwrap();
        let r = run(&s, Mode::Exec, 1);
        assert_eq!(r.output, "");
        assert!(r.ok);
    }

    #[test]
    fn intro_script() {
        let s = parse_workload(INTRO).unwrap();
        assert_eq!(run(&s, Mode::Exec, 3).output, "7\n6\n");
        let v = run(&s, Mode::Verify, 3);
        assert!(v.ok, "{}", v.output);
        assert_eq!(v.output, "PASS ann line 8\nPASS ann line 10\n");
    }

    #[test]
    fn generated_roundtrip_and_verify() {
        for seed in 0..4 {
            let g = generate(GenSpec { n: 120, q: 40, d: 1 + seed as usize % 3 }, seed);
            let reparsed = parse_workload(&g.to_string()).unwrap();
            let strip = |s: &WorkloadScript| s.commands.iter().map(|(_, c)| c.clone()).collect::<Vec<_>>();
            assert_eq!(strip(&reparsed), strip(&g));
            let r = run(&reparsed, Mode::Verify, seed);
            assert!(r.ok, "{}", r.output);
            assert_eq!(r.output.lines().filter(|l| l.starts_with("PASS")).count(), 40);
        }
    }

    #[test]
    fn gen_spec_parsing() {
        assert_eq!("n=10,q=5,d=3".parse::<GenSpec>().unwrap(), GenSpec { n: 10, q: 5, d: 3 });
        assert_eq!("d=1".parse::<GenSpec>().unwrap(), GenSpec { n: 1000, q: 100, d: 1 });
        assert!("n=x".parse::<GenSpec>().is_err());
        assert!("d=0".parse::<GenSpec>().is_err());
        assert!("z=3".parse::<GenSpec>().is_err());
    }

    #[test]
    fn bench_rows() {
        let s = generate(GenSpec { n: 64, q: 30, d: 2 }, 9);
        let csv = run(&s, Mode::Bench, 9).output;
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("n,add"));
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn deterministic_output() {
        let s = generate(GenSpec { n: 200, q: 60, d: 2 }, 5);
        assert_eq!(run(&s, Mode::Exec, 5), run(&s, Mode::Exec, 5));
        assert_eq!(run(&s, Mode::Bench, 5), run(&s, Mode::Bench, 5));
    }
}
