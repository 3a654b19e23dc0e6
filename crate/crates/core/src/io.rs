//! Text formats for games, results, strategies, witnesses and benchmark rows.
//!
//! The grammar is in `FORMAT.md` at the repository root. Rendering is
//! deterministic: lines are sorted by vertex id, then by target id.

use std::fmt::Write as _;

use thiserror::Error;

use crate::game::{Energy, EnergyVector, GameGraph, GraphError, Owner, PositionalStrategy, VertexId};
use crate::kasi::MinWitness;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid game: {0}")]
    Validation(#[from] GraphError),
}

fn err<T>(line: usize, reason: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Parse {
        line,
        reason: reason.into(),
    })
}

/// Non-empty, non-comment lines with 1-based numbers, split on whitespace.
fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let fields: Vec<&str> = l.split_whitespace().collect();
        match fields.first() {
            None => None,
            Some(&"c") => None,
            Some(_) => Some((i + 1, fields)),
        }
    })
}

fn arity(line: usize, fields: &[&str], n: usize) -> Result<(), IoError> {
    if fields.len() != n {
        return err(line, format!("expected {} fields, found {}", n, fields.len()));
    }
    Ok(())
}

fn num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, IoError> {
    s.parse().or_else(|_| err(line, format!("bad {what} `{s}`")))
}

fn vertex(line: usize, s: &str, n: usize) -> Result<VertexId, IoError> {
    let v: usize = num(line, s, "vertex id")?;
    if v >= n {
        return err(line, format!("vertex {v} out of range 0..{n}"));
    }
    Ok(VertexId::from(v))
}

pub fn parse_game(text: &str) -> Result<GameGraph, IoError> {
    let mut header: Option<(usize, usize)> = None;
    let mut owners: Vec<Option<Owner>> = Vec::new();
    let mut edges = Vec::new();
    let mut last_line = 0;
    for (line, f) in records(text) {
        last_line = line;
        match (f[0], header) {
            ("p", None) => {
                arity(line, &f, 4)?;
                if f[1] != "mpg" {
                    return err(line, format!("unknown problem type `{}`", f[1]));
                }
                let n: usize = num(line, f[2], "vertex count")?;
                let m: usize = num(line, f[3], "edge count")?;
                if n > u32::MAX as usize {
                    return err(line, "too many vertices");
                }
                header = Some((n, m));
                owners = vec![None; n];
                edges.reserve(m.min(1 << 24));
            }
            ("p", Some(_)) => return err(line, "duplicate header"),
            (_, None) => return err(line, "expected header `p mpg <n> <m>`"),
            ("o", Some((n, _))) => {
                arity(line, &f, 3)?;
                let v = vertex(line, f[1], n)?;
                let owner = match f[2] {
                    "MAX" => Owner::Max,
                    "MIN" => Owner::Min,
                    other => return err(line, format!("bad owner `{other}`")),
                };
                if owners[v.index()].replace(owner).is_some() {
                    return err(line, format!("owner of {v} given twice"));
                }
            }
            ("e", Some((n, m))) => {
                arity(line, &f, 4)?;
                let u = vertex(line, f[1], n)?;
                let v = vertex(line, f[2], n)?;
                let w: i64 = num(line, f[3], "weight")?;
                if edges.len() == m {
                    return err(line, format!("more than {m} edges"));
                }
                edges.push((u.index(), v.index(), w));
            }
            (tag, Some(_)) => return err(line, format!("unknown line type `{tag}`")),
        }
    }
    let Some((_, m)) = header else {
        return err(last_line.max(1), "missing header");
    };
    if edges.len() != m {
        return err(last_line, format!("header announces {m} edges, found {}", edges.len()));
    }
    let owners = owners
        .into_iter()
        .enumerate()
        .map(|(v, o)| o.ok_or(v))
        .collect::<Result<Vec<_>, _>>()
        .or_else(|v| err(last_line, format!("missing owner for vertex {v}")))?;
    Ok(GameGraph::from_triples(owners, edges)?)
}

pub fn render_game(graph: &GameGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p mpg {} {}", graph.vertex_count(), graph.edge_count());
    for v in graph.vertices() {
        let tag = match graph.owner(v) {
            Owner::Max => "MAX",
            Owner::Min => "MIN",
        };
        let _ = writeln!(out, "o {v} {tag}");
    }
    let mut edges: Vec<_> = graph.edges().iter().map(|e| (e.source, e.target, e.weight)).collect();
    edges.sort_unstable();
    for (u, v, w) in edges {
        let _ = writeln!(out, "e {u} {v} {w}");
    }
    out
}

/// `v <id> <value|inf>` for every vertex.
pub fn render_result(values: &EnergyVector) -> String {
    let mut out = String::new();
    for (v, x) in values.as_slice().iter().enumerate() {
        let _ = writeln!(out, "v {v} {x}");
    }
    out
}

/// Reads `v` lines; ids must cover `0..k` exactly once each.
pub fn parse_result(text: &str) -> Result<EnergyVector, IoError> {
    let mut vals: Vec<Option<Energy>> = Vec::new();
    let mut last = 0;
    for (line, f) in records(text) {
        last = line;
        if f[0] != "v" {
            return err(line, format!("expected `v` line, found `{}`", f[0]));
        }
        arity(line, &f, 3)?;
        let v: usize = num(line, f[1], "vertex id")?;
        let x = match f[2] {
            "inf" => Energy::Infinite,
            s => Energy::Finite(num(line, s, "value")?),
        };
        if v >= vals.len() {
            vals.resize(v + 1, None);
        }
        if vals[v].replace(x).is_some() {
            return err(line, format!("value of {v} given twice"));
        }
    }
    vals.into_iter()
        .enumerate()
        .map(|(v, x)| x.ok_or(v))
        .collect::<Result<Vec<_>, _>>()
        .map(EnergyVector)
        .or_else(|v| err(last, format!("missing value for vertex {v}")))
}

fn write_strategy(out: &mut String, pi: &PositionalStrategy) {
    for (v, u) in pi.iter() {
        let _ = writeln!(out, "s {v} {u}");
    }
}

/// `s <id> <target>` for every vertex the strategy is defined on.
pub fn render_strategy(pi: &PositionalStrategy) -> String {
    let mut out = String::new();
    write_strategy(&mut out, pi);
    out
}

fn strategy_line(
    graph: &GameGraph,
    choice: &mut [Option<VertexId>],
    line: usize,
    f: &[&str],
) -> Result<(), IoError> {
    arity(line, f, 3)?;
    let n = graph.vertex_count();
    let v = vertex(line, f[1], n)?;
    let u = vertex(line, f[2], n)?;
    if choice[v.index()].replace(u).is_some() {
        return err(line, format!("choice at {v} given twice"));
    }
    Ok(())
}

/// Reads a positional strategy for `player` and checks it against `graph`.
pub fn parse_strategy(text: &str, graph: &GameGraph, player: Owner) -> Result<PositionalStrategy, IoError> {
    let mut choice = vec![None; graph.vertex_count()];
    for (line, f) in records(text) {
        if f[0] != "s" {
            return err(line, format!("expected `s` line, found `{}`", f[0]));
        }
        strategy_line(graph, &mut choice, line, &f)?;
    }
    let pi = PositionalStrategy::new(player, choice);
    pi.check(graph)?;
    Ok(pi)
}

/// Strategies in order, each introduced by `k <index>`, then `x <id> <index>`
/// for every vertex with a death index.
pub fn render_witness(witness: &MinWitness) -> String {
    let mut out = String::new();
    for (k, pi) in witness.strategies.iter().enumerate() {
        let _ = writeln!(out, "k {k}");
        write_strategy(&mut out, pi);
    }
    for (v, k) in witness.death_index.iter().enumerate() {
        if let Some(k) = k {
            let _ = writeln!(out, "x {v} {k}");
        }
    }
    out
}

pub fn parse_witness(text: &str, graph: &GameGraph) -> Result<MinWitness, IoError> {
    let n = graph.vertex_count();
    let mut tables: Vec<Vec<Option<VertexId>>> = Vec::new();
    let mut death = vec![None; n];
    let mut seen_x = false;
    for (line, f) in records(text) {
        match f[0] {
            "k" => {
                arity(line, &f, 2)?;
                let k: usize = num(line, f[1], "strategy index")?;
                if seen_x || k != tables.len() {
                    return err(line, format!("strategy block {k} out of order"));
                }
                tables.push(vec![None; n]);
            }
            "s" => match tables.last_mut() {
                Some(t) => strategy_line(graph, t, line, &f)?,
                None => return err(line, "`s` line before the first `k` block"),
            },
            "x" => {
                arity(line, &f, 3)?;
                seen_x = true;
                let v = vertex(line, f[1], n)?;
                let k: usize = num(line, f[2], "strategy index")?;
                if k >= tables.len() {
                    return err(line, format!("strategy index {k} out of range"));
                }
                if death[v.index()].replace(k).is_some() {
                    return err(line, format!("death index of {v} given twice"));
                }
            }
            tag => return err(line, format!("unknown line type `{tag}`")),
        }
    }
    let strategies = tables
        .into_iter()
        .map(|t| {
            let pi = PositionalStrategy::new(Owner::Min, t);
            pi.check(graph).map(|_| pi)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MinWitness {
        strategies,
        death_index: death,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Lb,
    Lwub,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Lb => "lb",
            Problem::Lwub => "lwub",
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lb" => Ok(Problem::Lb),
            "lwub" => Ok(Problem::Lwub),
            _ => Err(format!("unknown problem `{s}` (expected lb or lwub)")),
        }
    }
}

pub const BENCH_HEADER: &str = "instance,n,m,problem,bound,algorithm,seconds,iterations";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub problem: Problem,
    pub bound: u64,
    pub algorithm: String,
    pub seconds: f64,
    pub iterations: u64,
}

pub fn render_bench_row(row: &BenchRow) -> String {
    format!(
        "{},{},{},{},{},{},{:.6},{}",
        row.instance,
        row.n,
        row.m,
        row.problem.as_str(),
        row.bound,
        row.algorithm,
        row.seconds,
        row.iterations
    )
}

pub fn parse_bench_row(line: &str) -> Result<BenchRow, IoError> {
    let f: Vec<&str> = line.trim_end().split(',').collect();
    arity(1, &f, 8)?;
    Ok(BenchRow {
        instance: f[0].to_string(),
        n: num(1, f[1], "n")?,
        m: num(1, f[2], "m")?,
        problem: f[3].parse().or_else(|e: String| err(1, e))?,
        bound: num(1, f[4], "bound")?,
        algorithm: f[5].to_string(),
        seconds: num(1, f[6], "seconds")?,
        iterations: num(1, f[7], "iterations")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Energy::{Finite, Infinite};

    #[test]
    fn trivial_game() {
        let g = parse_game("p mpg 1 1\no 0 MAX\ne 0 0 0\n").unwrap();
        assert_eq!(g, GameGraph::from_triples(vec![Owner::Max], [(0, 0, 0)]).unwrap());
        assert_eq!(render_game(&g), "p mpg 1 1\no 0 MAX\ne 0 0 0\n");
    }

    #[test]
    fn comments_and_blank_lines() {
        let g = parse_game("c hello\n\np mpg 2 2\nc mid\no 1 MIN\no 0 MAX\ne 1 0 -3\ne 0 1 4\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(render_game(&g), "p mpg 2 2\no 0 MAX\no 1 MIN\ne 0 1 4\ne 1 0 -3\n");
    }

    fn parse_err(text: &str) -> (usize, String) {
        match parse_game(text) {
            Err(IoError::Parse { line, reason }) => (line, reason),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_games() {
        assert!(parse_err("p mpg 1 1\ne 0 0 0\n").1.contains("missing owner"));
        assert_eq!(parse_err("o 0 MAX\n").0, 1);
        assert_eq!(parse_err("p mpg 1 1\no 0 MAX\ne 0 1 0\n").0, 3);
        assert!(parse_err("p mpg 1 2\no 0 MAX\ne 0 0 0\n").1.contains("announces"));
        assert!(parse_err("p mpg 1 0\no 0 MAX\ne 0 0 0\n").1.contains("more than"));
        assert!(parse_err("p mpg 1 1\no 0 BOTH\ne 0 0 0\n").1.contains("owner"));
        assert!(parse_err("p mpg 1 1\no 0 MAX\no 0 MIN\ne 0 0 0\n").1.contains("twice"));
        assert!(parse_err("p mpg 1 1\no 0 MAX\ne 0 0 x\n").1.contains("weight"));
        assert!(parse_err("p sp 1 1\n").1.contains("problem"));
        assert!(parse_err("").1.contains("header"));
        assert!(parse_err("p mpg 1 1\np mpg 1 1\n").1.contains("duplicate"));
    }

    #[test]
    fn zero_out_degree_is_a_validation_error() {
        let r = parse_game("p mpg 2 1\no 0 MAX\no 1 MIN\ne 0 1 0\n");
        assert_eq!(r, Err(IoError::Validation(GraphError::ZeroOutDegree(VertexId(1)))));
    }

    #[test]
    fn result_lines() {
        let v = EnergyVector(vec![Finite(0), Finite(12), Infinite, Infinite]);
        let text = render_result(&v);
        assert_eq!(text, "v 0 0\nv 1 12\nv 2 inf\nv 3 inf\n");
        assert_eq!(parse_result(&text).unwrap(), v);
        assert!(parse_result("v 1 0\n").is_err());
        assert!(parse_result("v 0 -1\n").is_err());
    }

    #[test]
    fn empty_strategy_renders_nothing() {
        let g = GameGraph::from_triples(vec![Owner::Max], [(0, 0, 1)]).unwrap();
        let pi = PositionalStrategy::lowest_successor(&g, Owner::Min);
        assert_eq!(render_strategy(&pi), "");
        assert_eq!(parse_strategy("", &g, Owner::Min).unwrap(), pi);
    }

    #[test]
    fn strategy_round_trip_and_checks() {
        let g = GameGraph::from_triples(vec![Owner::Min, Owner::Max], [(0, 1, 1), (0, 0, 2), (1, 0, 0)]).unwrap();
        let pi = PositionalStrategy::new(Owner::Min, vec![Some(VertexId(1)), None]);
        assert_eq!(render_strategy(&pi), "s 0 1\n");
        assert_eq!(parse_strategy("s 0 1\n", &g, Owner::Min).unwrap(), pi);
        assert!(matches!(parse_strategy("s 1 0\n", &g, Owner::Min), Err(IoError::Validation(_))));
        assert!(matches!(parse_strategy("", &g, Owner::Min), Err(IoError::Validation(_))));
    }

    #[test]
    fn witness_round_trip() {
        let g = GameGraph::from_triples(vec![Owner::Min, Owner::Max], [(0, 1, 1), (0, 0, -2), (1, 0, 0)]).unwrap();
        let w = MinWitness {
            strategies: vec![
                PositionalStrategy::new(Owner::Min, vec![Some(VertexId(1)), None]),
                PositionalStrategy::new(Owner::Min, vec![Some(VertexId(0)), None]),
            ],
            death_index: vec![Some(1), None],
        };
        let text = render_witness(&w);
        assert_eq!(text, "k 0\ns 0 1\nk 1\ns 0 0\nx 0 1\n");
        assert_eq!(parse_witness(&text, &g).unwrap(), w);
        assert!(parse_witness("k 1\n", &g).is_err());
        assert!(parse_witness("k 0\ns 0 1\nx 0 3\n", &g).is_err());
    }

    #[test]
    fn bench_row_has_eight_fields() {
        let row = BenchRow {
            instance: "rand5-desk".into(),
            n: 100,
            m: 500,
            problem: Problem::Lb,
            bound: 990_000,
            algorithm: "kasi".into(),
            seconds: 0.25,
            iterations: 7,
        };
        let line = render_bench_row(&row);
        assert_eq!(line.split(',').count(), 8);
        assert_eq!(line, "rand5-desk,100,500,lb,990000,kasi,0.250000,7");
        assert_eq!(parse_bench_row(&line).unwrap(), row);
        assert_eq!(BENCH_HEADER.split(',').count(), 8);
    }
}
