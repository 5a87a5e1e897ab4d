//! Versioned JSON instance files.
//!
//! Complex entries are `[re, im]` pairs and matrices are row-major arrays of
//! rows. Floats are written with 17 significant digits, so a parsed file
//! serializes back to the same text when it was itself produced here.

use serde::{Deserialize, Serialize};

use crate::channels::{Channel, ChannelSequence, InputSpace};
use crate::dilation::{DilationTriple, SpectralMeasure};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::modmu::InputMeasure;
use crate::qpm::{Cell, Geometry, OutcomeSpace, Qpm};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Qpm(Qpm),
    Channel(Channel),
    ChannelWithMeasure(Channel, InputMeasure),
    Sequence(ChannelSequence),
    Measure(InputMeasure),
    Dilation(DilationTriple),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Qpm(_) => "qpm",
            Instance::Channel(_) => "channel",
            Instance::ChannelWithMeasure(..) => "channel+measure",
            Instance::Sequence(_) => "sequence",
            Instance::Measure(_) => "measure",
            Instance::Dilation(_) => "dilation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    /// Seed the instance was generated from, if any.
    pub seed: Option<u64>,
    pub instance: Instance,
}

impl InstanceFile {
    pub fn new(instance: Instance) -> Self {
        InstanceFile { seed: None, instance }
    }

    pub fn with_seed(instance: Instance, seed: u64) -> Self {
        InstanceFile {
            seed: Some(seed),
            instance,
        }
    }
}

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<usize>,
    /// Cell boundaries as `[numerator, denominator]` when cells are unequal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[u64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    schema_version: u64,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcomes: Option<RawSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measure: Option<Vec<f64>>,
    /// `kind = qpm` and `dilation` (the spectral effects).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    effects: Option<Vec<RawMatrix>>,
    /// Effects per input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channel: Option<Vec<Vec<RawMatrix>>>,
    /// Effects per term and input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<Vec<Vec<RawMatrix>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    env_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    isometry: Option<RawMatrix>,
}

impl RawInstance {
    fn empty(kind: &str, seed: Option<u64>) -> Self {
        RawInstance {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            dim: None,
            seed,
            outcomes: None,
            inputs: None,
            measure: None,
            effects: None,
            channel: None,
            terms: None,
            env_dim: None,
            isometry: None,
        }
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn require<T>(field: Option<T>, name: &str, kind: &str) -> Result<T> {
    field.ok_or_else(|| malformed(format!("kind {kind:?} requires field {name:?}")))
}

fn forbid<T>(field: &Option<T>, name: &str, kind: &str) -> Result<()> {
    if field.is_some() {
        return Err(malformed(format!("field {name:?} does not apply to kind {kind:?}")));
    }
    Ok(())
}

fn encode_matrix(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn decode_matrix(raw: &RawMatrix, rows: usize, cols: usize, what: &str) -> Result<CMatrix> {
    if raw.len() != rows || raw.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape(format!("{what} must be {rows}x{cols}")));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| linalg::c(raw[i][j][0], raw[i][j][1])))
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

fn encode_space(space: &OutcomeSpace) -> RawSpace {
    let atoms = space.atoms().to_vec();
    let (kind, prefix, cells) = match space.geometry() {
        None | Some(Geometry::Finite) => {
            return RawSpace {
                kind: "finite".into(),
                labels: Some(atoms),
                cells: None,
                edges: None,
            }
        }
        Some(Geometry::Interval(cells)) => ("interval", "I", cells),
        Some(Geometry::Circle(cells)) => ("circle", "S", cells),
    };
    let n = cells.len() as u64;
    let uniform = cells
        .iter()
        .enumerate()
        .all(|(k, c)| *c == Cell::new(num_rational::Ratio::new(k as u64, n), num_rational::Ratio::new(k as u64 + 1, n)));
    let labels = (atoms != default_labels(prefix, cells.len())).then_some(atoms);
    let edges = (!uniform).then(|| {
        std::iter::once(cells[0].lo)
            .chain(cells.iter().map(|c| c.hi))
            .map(|r| [*r.numer(), *r.denom()])
            .collect()
    });
    RawSpace {
        kind: kind.into(),
        labels,
        cells: Some(cells.len()),
        edges,
    }
}

fn decode_space(raw: RawSpace) -> Result<OutcomeSpace> {
    let (prefix, wrap): (&str, fn(Vec<Cell>) -> Geometry) = match raw.kind.as_str() {
        "finite" => {
            forbid(&raw.cells, "cells", "finite")?;
            forbid(&raw.edges, "edges", "finite")?;
            let labels = raw
                .labels
                .ok_or_else(|| malformed("finite outcome space requires \"labels\""))?;
            return OutcomeSpace::new(labels, None);
        }
        "interval" => ("I", Geometry::Interval),
        "circle" => ("S", Geometry::Circle),
        other => return Err(malformed(format!("unknown outcome space kind {other:?}"))),
    };
    let n = raw
        .cells
        .ok_or_else(|| malformed(format!("{} outcome space requires \"cells\"", raw.kind)))?;
    if n == 0 {
        return Err(Error::EmptyInput("at least one cell is required"));
    }
    let cells: Vec<Cell> = match raw.edges {
        None if raw.kind == "interval" && !n.is_power_of_two() => {
            return Err(malformed(format!("uniform interval cells must be a power of two, got {n}")));
        }
        None => (0..n as u64)
            .map(|k| Cell::new(num_rational::Ratio::new(k, n as u64), num_rational::Ratio::new(k + 1, n as u64)))
            .collect(),
        Some(edges) => {
            if edges.len() != n + 1 || edges.iter().any(|e| e[1] == 0) {
                return Err(malformed("edges must list cells + 1 boundaries with nonzero denominators"));
            }
            edges
                .windows(2)
                .map(|w| Cell::new(num_rational::Ratio::new(w[0][0], w[0][1]), num_rational::Ratio::new(w[1][0], w[1][1])))
                .collect()
        }
    };
    let labels = raw.labels.unwrap_or_else(|| default_labels(prefix, n));
    OutcomeSpace::new(labels, Some(wrap(cells)))
}

fn encode_family(e: &Qpm) -> Vec<RawMatrix> {
    e.effects().iter().map(|p| encode_matrix(p.matrix())).collect()
}

fn decode_family(raw: &[RawMatrix], space: &OutcomeSpace, dim: usize) -> Result<Qpm> {
    let effects = raw
        .iter()
        .enumerate()
        .map(|(a, m)| decode_matrix(m, dim, dim, &format!("effect {a}")))
        .collect::<Result<Vec<_>>>()?;
    Qpm::new(space.clone(), effects)
}

fn decode_channel(raw: &[Vec<RawMatrix>], inputs: &InputSpace, space: &OutcomeSpace, dim: usize) -> Result<Channel> {
    let family = raw
        .iter()
        .map(|fx| decode_family(fx, space, dim))
        .collect::<Result<Vec<_>>>()?;
    Channel::new(inputs.clone(), family)
}

fn encode_channel(e: &Channel) -> Vec<Vec<RawMatrix>> {
    e.family().iter().map(encode_family).collect()
}

fn to_raw(file: &InstanceFile) -> RawInstance {
    let mut raw = RawInstance::empty(file.instance.kind(), file.seed);
    match &file.instance {
        Instance::Qpm(e) => {
            raw.dim = Some(e.dim());
            raw.outcomes = Some(encode_space(e.space()));
            raw.effects = Some(encode_family(e));
        }
        Instance::Channel(e) => {
            raw.dim = Some(e.dim());
            raw.outcomes = Some(encode_space(e.space()));
            raw.inputs = Some(e.inputs().points().to_vec());
            raw.channel = Some(encode_channel(e));
        }
        Instance::ChannelWithMeasure(e, mu) => {
            raw.dim = Some(e.dim());
            raw.outcomes = Some(encode_space(e.space()));
            raw.inputs = Some(e.inputs().points().to_vec());
            raw.measure = Some(mu.weights().to_vec());
            raw.channel = Some(encode_channel(e));
        }
        Instance::Sequence(seq) => {
            let first = &seq.terms()[0];
            raw.dim = Some(first.dim());
            raw.outcomes = Some(encode_space(first.space()));
            raw.inputs = Some(first.inputs().points().to_vec());
            raw.terms = Some(seq.terms().iter().map(encode_channel).collect());
        }
        Instance::Measure(mu) => {
            raw.inputs = Some(mu.inputs().points().to_vec());
            raw.measure = Some(mu.weights().to_vec());
        }
        Instance::Dilation(t) => {
            raw.dim = Some(t.isometry.ncols());
            raw.env_dim = Some(t.env_dim);
            raw.outcomes = Some(encode_space(t.spectral.as_qpm().space()));
            raw.isometry = Some(encode_matrix(&t.isometry));
            raw.effects = Some(encode_family(t.spectral.as_qpm()));
        }
    }
    raw
}

fn from_raw(raw: RawInstance) -> Result<InstanceFile> {
    let kind = raw.kind.clone();
    let k = kind.as_str();
    let inputs = raw.inputs.map(InputSpace::new).transpose()?;
    let instance = match k {
        "qpm" => {
            forbid(&inputs, "inputs", k)?;
            forbid(&raw.measure, "measure", k)?;
            forbid(&raw.channel, "channel", k)?;
            forbid(&raw.terms, "terms", k)?;
            forbid(&raw.isometry, "isometry", k)?;
            forbid(&raw.env_dim, "env_dim", k)?;
            let dim = require(raw.dim, "dim", k)?;
            let space = decode_space(require(raw.outcomes, "outcomes", k)?)?;
            Instance::Qpm(decode_family(&require(raw.effects, "effects", k)?, &space, dim)?)
        }
        "channel" | "channel+measure" => {
            forbid(&raw.effects, "effects", k)?;
            forbid(&raw.terms, "terms", k)?;
            forbid(&raw.isometry, "isometry", k)?;
            forbid(&raw.env_dim, "env_dim", k)?;
            let dim = require(raw.dim, "dim", k)?;
            let space = decode_space(require(raw.outcomes, "outcomes", k)?)?;
            let inputs = require(inputs, "inputs", k)?;
            let channel = decode_channel(&require(raw.channel, "channel", k)?, &inputs, &space, dim)?;
            if k == "channel" {
                forbid(&raw.measure, "measure", k)?;
                Instance::Channel(channel)
            } else {
                let mu = InputMeasure::new(inputs, require(raw.measure, "measure", k)?)?;
                Instance::ChannelWithMeasure(channel, mu)
            }
        }
        "sequence" => {
            forbid(&raw.effects, "effects", k)?;
            forbid(&raw.channel, "channel", k)?;
            forbid(&raw.measure, "measure", k)?;
            forbid(&raw.isometry, "isometry", k)?;
            forbid(&raw.env_dim, "env_dim", k)?;
            let dim = require(raw.dim, "dim", k)?;
            let space = decode_space(require(raw.outcomes, "outcomes", k)?)?;
            let inputs = require(inputs, "inputs", k)?;
            let terms = require(raw.terms, "terms", k)?
                .iter()
                .map(|t| decode_channel(t, &inputs, &space, dim))
                .collect::<Result<Vec<_>>>()?;
            Instance::Sequence(ChannelSequence::new(terms)?)
        }
        "measure" => {
            forbid(&raw.dim, "dim", k)?;
            forbid(&raw.outcomes, "outcomes", k)?;
            forbid(&raw.effects, "effects", k)?;
            forbid(&raw.channel, "channel", k)?;
            forbid(&raw.terms, "terms", k)?;
            forbid(&raw.isometry, "isometry", k)?;
            forbid(&raw.env_dim, "env_dim", k)?;
            let inputs = require(inputs, "inputs", k)?;
            Instance::Measure(InputMeasure::new(inputs, require(raw.measure, "measure", k)?)?)
        }
        "dilation" => {
            forbid(&inputs, "inputs", k)?;
            forbid(&raw.measure, "measure", k)?;
            forbid(&raw.channel, "channel", k)?;
            forbid(&raw.terms, "terms", k)?;
            let dim = require(raw.dim, "dim", k)?;
            let env_dim = require(raw.env_dim, "env_dim", k)?;
            let space = decode_space(require(raw.outcomes, "outcomes", k)?)?;
            let isometry = decode_matrix(&require(raw.isometry, "isometry", k)?, env_dim, dim, "isometry")?;
            let spectral = decode_family(&require(raw.effects, "effects", k)?, &space, env_dim)?;
            Instance::Dilation(DilationTriple {
                env_dim,
                spectral: SpectralMeasure::new(spectral)?,
                isometry,
            })
        }
        other => return Err(malformed(format!("unknown instance kind {other:?}"))),
    };
    if let Some(dim) = raw.dim {
        if dim == 0 {
            return Err(Error::EmptyInput("dimension must be at least 1"));
        }
    }
    Ok(InstanceFile {
        seed: raw.seed,
        instance,
    })
}

fn parse_error(e: &serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    let version = value
        .get("schema_version")
        .ok_or_else(|| malformed("missing field \"schema_version\""))?;
    let found = version
        .as_u64()
        .ok_or_else(|| malformed("\"schema_version\" must be a nonnegative integer"))?;
    if found != SCHEMA_VERSION {
        return Err(Error::Version {
            found,
            supported: SCHEMA_VERSION,
        });
    }
    // parsed again from text so that field errors carry positions
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| parse_error(&e))?;
    from_raw(raw)
}

/// Pretty JSON with every float written as `{:.16e}`.
struct FullPrecision(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn check_finite(raw: &RawInstance) -> Result<()> {
    let bad = |m: &RawMatrix| m.iter().flatten().flatten().any(|v| !v.is_finite());
    let any = raw.effects.iter().flatten().any(bad)
        || raw.channel.iter().flatten().flatten().any(bad)
        || raw.terms.iter().flatten().flatten().flatten().any(bad)
        || raw.isometry.iter().any(bad)
        || raw.measure.iter().flatten().any(|v| !v.is_finite());
    if any {
        return Err(Error::Invariant("instance has non-finite entries".into()));
    }
    Ok(())
}

pub fn serialize_instance(file: &InstanceFile) -> Result<String> {
    let raw = to_raw(file);
    check_finite(&raw)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        FullPrecision(serde_json::ser::PrettyFormatter::with_indent(b"  ")),
    );
    raw.serialize(&mut ser).map_err(|e| malformed(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("JSON output is UTF-8"))
}

pub fn read_instance(path: &std::path::Path) -> Result<InstanceFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text)
}

pub fn write_instance(path: &std::path::Path, file: &InstanceFile) -> Result<()> {
    let text = serialize_instance(file)?;
    std::fs::write(path, text).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_qpm, random_sequence, Drift};

    fn round_trip(file: &InstanceFile) {
        let text = serialize_instance(file).unwrap();
        let back = parse_instance(&text).unwrap();
        assert_eq!(&back, file);
        assert_eq!(serialize_instance(&back).unwrap(), text);
    }

    #[test]
    fn every_kind_round_trips() {
        round_trip(&InstanceFile::with_seed(Instance::Qpm(random_qpm(2, 3, 1).unwrap()), 1));
        let e = random_channel(2, 2, 3, 4).unwrap();
        round_trip(&InstanceFile::new(Instance::Channel(e.clone())));
        let mu = InputMeasure::new(e.inputs().clone(), vec![0.5, 0.5, 0.0]).unwrap();
        round_trip(&InstanceFile::new(Instance::ChannelWithMeasure(e, mu.clone())));
        round_trip(&InstanceFile::new(Instance::Measure(mu)));
        let seq = random_sequence(2, 2, 2, 3, 9, Drift::Shrink).unwrap();
        round_trip(&InstanceFile::new(Instance::Sequence(seq)));
        let dil = crate::dilation::naimark_dilate(&random_qpm(2, 3, 5).unwrap(), true).unwrap();
        round_trip(&InstanceFile::new(Instance::Dilation(dil)));
        let interval = crate::random::random_qpm_on(OutcomeSpace::interval(4).unwrap(), 2, 3).unwrap();
        round_trip(&InstanceFile::new(Instance::Qpm(interval.clone())));
        let merged = crate::discretize::coarsen(&interval, &[0, 0, 0, 1]).unwrap();
        round_trip(&InstanceFile::new(Instance::Qpm(merged)));
    }

    #[test]
    fn seventeen_digits() {
        let text = serialize_instance(&InstanceFile::new(Instance::Qpm(Qpm::classical(&[0.1, 0.9]).unwrap()))).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
    }

    #[test]
    fn rejections() {
        let good = serialize_instance(&InstanceFile::new(Instance::Qpm(Qpm::classical(&[0.5, 0.5]).unwrap()))).unwrap();
        let nan = good.replacen("5.0000000000000000e-1", "NaN", 1);
        assert!(matches!(parse_instance(&nan), Err(Error::Parse { .. })));

        let unknown = good.replacen("\"kind\"", "\"colour\": 1,\n  \"kind\"", 1);
        match parse_instance(&unknown) {
            Err(Error::Parse { message, line, .. }) => {
                assert!(message.contains("colour"), "{message}");
                assert!(line >= 2);
            }
            other => panic!("{other:?}"),
        }

        let future = good.replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
        assert_eq!(
            parse_instance(&future),
            Err(Error::Version {
                found: 2,
                supported: 1
            })
        );
        assert!(matches!(parse_instance("{\"schema_version\": 1,"), Err(Error::Parse { .. })));
    }

    #[test]
    fn non_finite_values_not_written() {
        let mut family = vec![CMatrix::identity(1, 1)];
        family[0][(0, 0)] = linalg::c(f64::NAN, 0.0);
        assert!(Qpm::from_effects(family).is_err());
    }
}
