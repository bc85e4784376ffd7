//! Plain-text fixture files for tensors, jets and kernel sequences.
//!
//! ```text
//! # comments run to the end of the line
//! tensor 2 2
//! 1 1 = 1.5
//! 1 2 = -0.25      # indices are 1-based, any order
//! end
//! ```
//!
//! Containers wrap tensor blocks:
//!
//! ```text
//! jet <dim> <degree>            degree <n>             then a tensor block
//! vectorjet <dim> <degree>      component <j> degree <n>
//! moments <dim> <degree>        grade <n>
//! kernels <basis> <dim> <degree> grade <n>
//! ```
//!
//! Grades that are not listed are zero. Unlisted tensor entries are zero.

use std::fmt::Write as _;

use crate::appell::{Basis, KernelSeq};
use crate::combin::multichoose;
use crate::error::{Error, Result};
use crate::jets::{ScalarJet, VectorJet};
use crate::measures::MeasureModel;
use crate::symtensor::SymTensor;

pub const MAX_DIM: usize = 64;
pub const MAX_DEGREE: usize = 32;
/// Largest number of stored coefficients a single tensor block may declare.
pub const MAX_COEFFS: usize = 1 << 20;

/// Kernels as read from a file; attach them to a basis with
/// `AppellBasis::test_function` or `AppellBasis::distribution`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFile {
    pub basis: Basis,
    pub dim: usize,
    pub kernels: Vec<SymTensor>,
}

impl KernelFile {
    pub fn from_seq(seq: &KernelSeq) -> Self {
        KernelFile {
            basis: seq.basis(),
            dim: seq.dim(),
            kernels: seq.kernels().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fixture {
    Tensor(SymTensor),
    Jet(ScalarJet),
    VectorJet(VectorJet),
    Moments(ScalarJet),
    Kernels(KernelFile),
}

struct Lines<'a> {
    items: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                let words: Vec<&str> = l.split_whitespace().collect();
                (!words.is_empty()).then_some((i + 1, words))
            })
            .collect();
        Lines { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let out = self.items.get(self.pos).cloned();
        self.pos += 1;
        out
    }

    fn peek(&self) -> Option<&(usize, Vec<&'a str>)> {
        self.items.get(self.pos)
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|x| x.0).unwrap_or(0)
    }
}

fn num(line: usize, word: &str, what: &str) -> Result<usize> {
    word.parse()
        .map_err(|_| Error::parse(line, format!("expected {what}, found `{word}`")))
}

fn dim_arg(line: usize, word: &str) -> Result<usize> {
    let d = num(line, word, "a dimension")?;
    if d == 0 || d > MAX_DIM {
        return Err(Error::parse(line, format!("dimension must be in 1..={MAX_DIM}")));
    }
    Ok(d)
}

fn degree_arg(line: usize, word: &str) -> Result<usize> {
    let n = num(line, word, "a degree")?;
    if n > MAX_DEGREE {
        return Err(Error::parse(line, format!("degree must be at most {MAX_DEGREE}")));
    }
    Ok(n)
}

fn expect_words(line: usize, words: &[&str], n: usize, usage: &str) -> Result<()> {
    if words.len() != n {
        return Err(Error::parse(line, format!("expected `{usage}`")));
    }
    Ok(())
}

fn check_size(line: usize, dim: usize, rank: usize) -> Result<()> {
    if multichoose(dim, rank) > MAX_COEFFS {
        return Err(Error::parse(line, "tensor too large"));
    }
    Ok(())
}

fn tensor_block(lines: &mut Lines) -> Result<SymTensor> {
    let (line, head) = lines
        .next()
        .ok_or_else(|| Error::parse(lines.last_line(), "expected `tensor <dim> <rank>`"))?;
    if head[0] != "tensor" {
        return Err(Error::parse(line, format!("expected `tensor`, found `{}`", head[0])));
    }
    expect_words(line, &head, 3, "tensor <dim> <rank>")?;
    let dim = dim_arg(line, head[1])?;
    let rank = degree_arg(line, head[2])?;
    check_size(line, dim, rank)?;
    let mut t = SymTensor::zeros(dim, rank);
    let mut seen = vec![false; t.len()];
    loop {
        let (line, words) = lines
            .next()
            .ok_or_else(|| Error::parse(lines.last_line(), "tensor block is missing `end`"))?;
        if words == ["end"] {
            return Ok(t);
        }
        let eq = words
            .iter()
            .position(|w| *w == "=")
            .ok_or_else(|| Error::parse(line, "expected `i1 .. in = value`"))?;
        if eq != rank || words.len() != rank + 2 {
            return Err(Error::parse(line, format!("expected {rank} indices, `=` and a value")));
        }
        let mut idx = Vec::with_capacity(rank);
        for w in &words[..rank] {
            let i = num(line, w, "an index")?;
            if i == 0 || i > dim {
                return Err(Error::parse(line, format!("index {i} outside 1..={dim}")));
            }
            idx.push(i - 1);
        }
        idx.sort_unstable();
        let value: f64 = words[rank + 1]
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid number `{}`", words[rank + 1])))?;
        if !value.is_finite() {
            return Err(Error::parse(line, "value is not finite"));
        }
        let pos = crate::combin::lex_rank(dim, &idx);
        if std::mem::replace(&mut seen[pos], true) {
            return Err(Error::parse(line, "duplicate entry"));
        }
        t.set(&idx, value);
    }
}

/// Tensor blocks keyed by a section header. `section` maps a header line to
/// the expected rank and a slot number.
fn sections<F>(lines: &mut Lines, dim: usize, mut section: F) -> Result<Vec<(usize, SymTensor)>>
where
    F: FnMut(usize, &[&str]) -> Result<(usize, usize)>,
{
    let mut out = Vec::new();
    while let Some((line, words)) = lines.next() {
        let (rank, slot) = section(line, &words)?;
        let t = tensor_block(lines)?;
        if t.dim() != dim || t.rank() != rank {
            return Err(Error::parse(
                line + 1,
                format!("expected a tensor of dimension {dim} and rank {rank}"),
            ));
        }
        out.push((slot, t));
    }
    Ok(out)
}

fn fill(dim: usize, degree: usize, found: impl Iterator<Item = (usize, SymTensor)>) -> Vec<SymTensor> {
    let mut kernels: Vec<SymTensor> = (0..=degree).map(|n| SymTensor::zeros(dim, n)).collect();
    for (n, t) in found {
        kernels[n] = t;
    }
    kernels
}

fn graded(lines: &mut Lines, dim: usize, degree: usize, keyword: &str) -> Result<Vec<SymTensor>> {
    let mut filled = vec![false; degree + 1];
    let found = sections(lines, dim, |line, words| {
        if words[0] != keyword {
            return Err(Error::parse(line, format!("expected `{keyword} <n>`, found `{}`", words[0])));
        }
        expect_words(line, words, 2, &format!("{keyword} <n>"))?;
        let n = num(line, words[1], "a grade")?;
        if n > degree {
            return Err(Error::parse(line, format!("grade {n} exceeds degree {degree}")));
        }
        if std::mem::replace(&mut filled[n], true) {
            return Err(Error::parse(line, format!("grade {n} given twice")));
        }
        Ok((n, n))
    })?;
    Ok(fill(dim, degree, found.into_iter()))
}

fn check_total(line: usize, dim: usize, degree: usize, copies: usize) -> Result<()> {
    let total: usize = (0..=degree).map(|n| multichoose(dim, n)).sum();
    if total.saturating_mul(copies) > MAX_COEFFS {
        return Err(Error::parse(line, "fixture too large"));
    }
    Ok(())
}

fn parse_basis(line: usize, word: &str) -> Result<Basis> {
    match word {
        "monomial" => Ok(Basis::Monomial),
        "appell" => Ok(Basis::Appell),
        "dual" => Ok(Basis::Dual),
        other => Err(Error::parse(line, format!("unknown basis `{other}`"))),
    }
}

/// Parses any fixture kind, dispatching on the header line.
pub fn parse(text: &str) -> Result<Fixture> {
    let mut lines = Lines::new(text);
    let (line, head) = lines
        .peek()
        .cloned()
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    if head[0] == "tensor" {
        let t = tensor_block(&mut lines)?;
        if let Some((line, _)) = lines.next() {
            return Err(Error::parse(line, "trailing content after tensor block"));
        }
        return Ok(Fixture::Tensor(t));
    }
    lines.next();
    match head[0] {
        "jet" | "moments" => {
            expect_words(line, &head, 3, &format!("{} <dim> <degree>", head[0]))?;
            let dim = dim_arg(line, head[1])?;
            let degree = degree_arg(line, head[2])?;
            check_total(line, dim, degree, 1)?;
            let keyword = if head[0] == "jet" { "degree" } else { "grade" };
            let kernels = graded(&mut lines, dim, degree, keyword)?;
            let jet = ScalarJet::from_kernels(dim, kernels)?;
            Ok(if head[0] == "jet" {
                Fixture::Jet(jet)
            } else {
                Fixture::Moments(jet)
            })
        }
        "vectorjet" => {
            expect_words(line, &head, 3, "vectorjet <dim> <degree>")?;
            let dim = dim_arg(line, head[1])?;
            let degree = degree_arg(line, head[2])?;
            check_total(line, dim, degree, dim)?;
            let mut filled = vec![false; dim * (degree + 1)];
            let found = sections(&mut lines, dim, |line, words| {
                if words.len() != 4 || words[0] != "component" || words[2] != "degree" {
                    return Err(Error::parse(line, "expected `component <j> degree <n>`"));
                }
                let j = num(line, words[1], "a component")?;
                if j == 0 || j > dim {
                    return Err(Error::parse(line, format!("component {j} outside 1..={dim}")));
                }
                let n = num(line, words[3], "a degree")?;
                if n > degree {
                    return Err(Error::parse(line, format!("degree {n} exceeds {degree}")));
                }
                let slot = (j - 1) * (degree + 1) + n;
                if std::mem::replace(&mut filled[slot], true) {
                    return Err(Error::parse(line, "section given twice"));
                }
                Ok((n, slot))
            })?;
            let mut per: Vec<Vec<(usize, SymTensor)>> = vec![Vec::new(); dim];
            for (slot, t) in found {
                per[slot / (degree + 1)].push((slot % (degree + 1), t));
            }
            let comps = per
                .into_iter()
                .map(|ks| ScalarJet::from_kernels(dim, fill(dim, degree, ks.into_iter())))
                .collect::<Result<Vec<_>>>()?;
            Ok(Fixture::VectorJet(VectorJet::from_components(comps)?))
        }
        "kernels" => {
            expect_words(line, &head, 4, "kernels <monomial|appell|dual> <dim> <degree>")?;
            let basis = parse_basis(line, head[1])?;
            let dim = dim_arg(line, head[2])?;
            let degree = degree_arg(line, head[3])?;
            check_total(line, dim, degree, 1)?;
            let kernels = graded(&mut lines, dim, degree, "grade")?;
            Ok(Fixture::Kernels(KernelFile { basis, dim, kernels }))
        }
        other => Err(Error::parse(line, format!("unknown fixture kind `{other}`"))),
    }
}

fn wrong_kind(found: &Fixture, want: &str) -> Error {
    let kind = match found {
        Fixture::Tensor(_) => "tensor",
        Fixture::Jet(_) => "jet",
        Fixture::VectorJet(_) => "vectorjet",
        Fixture::Moments(_) => "moments",
        Fixture::Kernels(_) => "kernels",
    };
    Error::parse(1, format!("expected a {want} fixture, found {kind}"))
}

pub fn parse_tensor(text: &str) -> Result<SymTensor> {
    match parse(text)? {
        Fixture::Tensor(t) => Ok(t),
        other => Err(wrong_kind(&other, "tensor")),
    }
}

pub fn parse_jet(text: &str) -> Result<ScalarJet> {
    match parse(text)? {
        Fixture::Jet(j) => Ok(j),
        other => Err(wrong_kind(&other, "jet")),
    }
}

pub fn parse_vector_jet(text: &str) -> Result<VectorJet> {
    match parse(text)? {
        Fixture::VectorJet(j) => Ok(j),
        other => Err(wrong_kind(&other, "vectorjet")),
    }
}

/// A moment file as a measure model; the grade-0 moment must be 1.
pub fn parse_moments(text: &str) -> Result<MeasureModel> {
    match parse(text)? {
        Fixture::Moments(m) => MeasureModel::from_moments(m),
        other => Err(wrong_kind(&other, "moments")),
    }
}

pub fn parse_kernels(text: &str) -> Result<KernelFile> {
    match parse(text)? {
        Fixture::Kernels(k) => Ok(k),
        other => Err(wrong_kind(&other, "kernels")),
    }
}

fn write_tensor_into(out: &mut String, t: &SymTensor) {
    let _ = writeln!(out, "tensor {} {}", t.dim(), t.rank());
    for (idx, v) in t.entries() {
        if v == 0.0 {
            continue;
        }
        for i in idx {
            let _ = write!(out, "{} ", i + 1);
        }
        let _ = writeln!(out, "= {v:?}");
    }
    out.push_str("end\n");
}

fn write_graded(out: &mut String, keyword: &str, kernels: &[SymTensor]) {
    for (n, k) in kernels.iter().enumerate() {
        if !k.is_zero() {
            let _ = writeln!(out, "{keyword} {n}");
            write_tensor_into(out, k);
        }
    }
}

/// Text that [`parse`] reads back to an equal fixture.
pub fn write(f: &Fixture) -> String {
    let mut out = String::new();
    match f {
        Fixture::Tensor(t) => write_tensor_into(&mut out, t),
        Fixture::Jet(j) => {
            let _ = writeln!(out, "jet {} {}", j.dim(), j.degree());
            write_graded(&mut out, "degree", j.kernels());
        }
        Fixture::Moments(j) => {
            let _ = writeln!(out, "moments {} {}", j.dim(), j.degree());
            write_graded(&mut out, "grade", j.kernels());
        }
        Fixture::VectorJet(v) => {
            let _ = writeln!(out, "vectorjet {} {}", v.dim(), v.degree());
            for (j, c) in v.components().iter().enumerate() {
                for (n, k) in c.kernels().iter().enumerate() {
                    if !k.is_zero() {
                        let _ = writeln!(out, "component {} degree {n}", j + 1);
                        write_tensor_into(&mut out, k);
                    }
                }
            }
        }
        Fixture::Kernels(k) => {
            let _ = writeln!(out, "kernels {} {} {}", k.basis.name(), k.dim, k.kernels.len() - 1);
            write_graded(&mut out, "grade", &k.kernels);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tensor_example() {
        let t = parse_tensor("# a\ntensor 2 2\n2 1 = 0.5\n1 1 = -1e-3 # x\nend\n").unwrap();
        assert_eq!(t.get(&[0, 1]), 0.5);
        assert_eq!(t.get(&[1, 0]), 0.5);
        assert_eq!(t.get(&[0, 0]), -1e-3);
        assert_eq!(t.get(&[1, 1]), 0.0);
        let s = parse_tensor("tensor 3 0\n= 2\nend").unwrap();
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("tensor 2 1\n3 = 1\nend", 2),
            ("tensor 2 1\n1 = 1\n1 = 2\nend", 3),
            ("tensor 2 1\n1 = nan\nend", 2),
            ("tensor 2 1\n1 = 1\n", 2),
            ("jet 1 2\ndegree 3\ntensor 1 3\nend", 2),
            ("jet 1 2\ndegree 1\ntensor 1 2\nend", 3),
            ("kernels weird 1 2", 1),
            ("vectorjet 2 1\ncomponent 3 degree 0\ntensor 2 0\nend", 2),
            ("bogus 1", 1),
            ("tensor 0 1\nend", 1),
            ("tensor 64 32\nend", 1),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(parse_moments("moments 1 2\ngrade 0\ntensor 1 0\n= 2\nend").is_err());
    }

    #[test]
    fn moments_file_builds_a_measure() {
        let text = "moments 1 2\ngrade 0\ntensor 1 0\n= 1\nend\ngrade 2\ntensor 1 2\n1 1 = 1\nend\n";
        let m = parse_moments(text).unwrap();
        assert_eq!(m.max_degree(), Some(2));
    }

    fn tensor_strategy(dim: usize, rank: usize) -> impl Strategy<Value = SymTensor> {
        let len = multichoose(dim, rank);
        proptest::collection::vec(
            prop_oneof![Just(0.0), -1e6..1e6f64, any::<f64>().prop_filter("finite", |v| v.is_finite())],
            len,
        )
        .prop_map(move |c| SymTensor::from_coeffs(dim, rank, c).unwrap())
    }

    fn kernels_strategy() -> impl Strategy<Value = (usize, Vec<SymTensor>)> {
        (1usize..4, 0usize..5).prop_flat_map(|(d, n)| {
            let grades: Vec<_> = (0..=n).map(|k| tensor_strategy(d, k)).collect();
            (Just(d), grades)
        })
    }

    proptest! {
        #[test]
        fn tensor_roundtrip(t in (1usize..4, 0usize..5).prop_flat_map(|(d, r)| tensor_strategy(d, r))) {
            let f = Fixture::Tensor(t);
            prop_assert_eq!(parse(&write(&f)).unwrap(), f);
        }

        #[test]
        fn jet_roundtrip((d, ks) in kernels_strategy(), moments in any::<bool>()) {
            let j = ScalarJet::from_kernels(d, ks).unwrap();
            let f = if moments { Fixture::Moments(j) } else { Fixture::Jet(j) };
            prop_assert_eq!(parse(&write(&f)).unwrap(), f);
        }

        #[test]
        fn kernels_roundtrip((d, ks) in kernels_strategy(), b in 0usize..3) {
            let basis = [Basis::Monomial, Basis::Appell, Basis::Dual][b];
            let f = Fixture::Kernels(KernelFile { basis, dim: d, kernels: ks });
            prop_assert_eq!(parse(&write(&f)).unwrap(), f);
        }

        #[test]
        fn vector_jet_roundtrip(parts in (1usize..3, 0usize..4).prop_flat_map(|(d, n)| {
            let comps: Vec<_> = (0..d)
                .map(|_| (1..=n).map(|k| tensor_strategy(d, k)).collect::<Vec<_>>())
                .collect();
            (Just(d), comps)
        })) {
            let (d, comps) = parts;
            let v = VectorJet::from_components(
                comps
                    .into_iter()
                    .map(|ks| {
                        // vector series vanish at the origin
                        let all = std::iter::once(SymTensor::zeros(d, 0)).chain(ks).collect();
                        ScalarJet::from_kernels(d, all).unwrap()
                    })
                    .collect(),
            ).unwrap();
            let f = Fixture::VectorJet(v);
            prop_assert_eq!(parse(&write(&f)).unwrap(), f);
        }

        #[test]
        fn parser_never_panics(s in "\\PC*") {
            let _ = parse(&s);
        }
    }
}
