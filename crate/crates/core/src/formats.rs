//! Text formats for models, generator sets, and plants, plus atomic output
//! writing and content hashing for run manifests.
//!
//! Files are line-oriented: the first token of a line is the key, the rest
//! are values; `#` starts a comment. Reals are serialized with 17
//! significant digits, which round-trips every finite f64 bit-exactly.

use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::cocycle::{CocycleError, GeneratorSet};
use crate::linalg::{LinalgError, Matrix};
use crate::stabilization::{ControlError, Subsystem};
use crate::switching::{DwellDistribution, ModelError, SwitchingModel};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Generators(#[from] CocycleError),
    #[error("{0}")]
    Plant(#[from] ControlError),
    #[error("{0}")]
    Linalg(#[from] LinalgError),
}

/// Serializes a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Tokenized non-empty lines: `(line_number, key, values)`.
fn tokenize(text: &str) -> Vec<(usize, &str, Vec<&str>)> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let stripped = raw.split('#').next().unwrap_or("");
        let mut tokens = stripped.split_whitespace();
        if let Some(key) = tokens.next() {
            out.push((idx + 1, key, tokens.collect()));
        }
    }
    out
}

fn parse_reals(line: usize, tokens: &[&str]) -> Result<Vec<f64>, FormatError> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| syntax(line, format!("`{t}` is not a real number")))
        })
        .collect()
}

fn parse_count(line: usize, token: Option<&&str>, what: &str) -> Result<usize, FormatError> {
    token
        .ok_or_else(|| syntax(line, format!("expected {what}")))?
        .parse::<usize>()
        .map_err(|_| syntax(line, format!("`{}` is not a valid {what}", token.unwrap())))
}

/// Parses a switching model:
///
/// ```text
/// modes 2
/// transition 0 1 1 0
/// dwell dirac 1
/// dwell exponential 2
/// ```
pub fn parse_model(text: &str) -> Result<SwitchingModel, FormatError> {
    let mut modes: Option<usize> = None;
    let mut transition: Option<(usize, Vec<f64>)> = None;
    let mut dwell: Vec<DwellDistribution> = Vec::new();

    for (line, key, values) in tokenize(text) {
        match key {
            "modes" => modes = Some(parse_count(line, values.first(), "mode count")?),
            "transition" => transition = Some((line, parse_reals(line, &values)?)),
            "dwell" => {
                let kind = values
                    .first()
                    .ok_or_else(|| syntax(line, "dwell line needs a kind"))?;
                let params = parse_reals(line, &values[1..])?;
                let d = DwellDistribution::from_parts(kind, &params).ok_or_else(|| {
                    syntax(
                        line,
                        format!("unknown dwell `{kind}` with {} parameters", params.len()),
                    )
                })?;
                dwell.push(d);
            }
            other => return Err(syntax(line, format!("unknown key `{other}`"))),
        }
    }

    let n = modes.ok_or(FormatError::Missing("modes"))?;
    let (tline, entries) = transition.ok_or(FormatError::Missing("transition"))?;
    if entries.len() != n * n {
        return Err(syntax(
            tline,
            format!(
                "transition needs {} entries, found {}",
                n * n,
                entries.len()
            ),
        ));
    }
    if dwell.len() != n {
        return Err(FormatError::Missing("dwell (one line per mode)"));
    }
    let m = Matrix::new(n, n, entries)?;
    Ok(SwitchingModel::new(m, dwell)?)
}

pub fn write_model(model: &SwitchingModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("modes {}\n", model.modes()));
    out.push_str("transition");
    for v in model.transition().data() {
        out.push(' ');
        out.push_str(&format_real(*v));
    }
    out.push('\n');
    for d in model.dwell() {
        out.push_str(&format!("dwell {}", d.kind_name()));
        for p in d.params() {
            out.push(' ');
            out.push_str(&format_real(p));
        }
        out.push('\n');
    }
    out
}

/// Parses a generator set:
///
/// ```text
/// dimension 2
/// generator 0 1 0 0
/// generator 0 0 -1 0
/// ```
pub fn parse_generators(text: &str) -> Result<GeneratorSet, FormatError> {
    let mut dimension: Option<usize> = None;
    let mut generators: Vec<Matrix> = Vec::new();
    for (line, key, values) in tokenize(text) {
        match key {
            "dimension" => dimension = Some(parse_count(line, values.first(), "dimension")?),
            "generator" => {
                let d = dimension.ok_or_else(|| {
                    syntax(line, "dimension must come before the first generator")
                })?;
                let entries = parse_reals(line, &values)?;
                if entries.len() != d * d {
                    return Err(syntax(
                        line,
                        format!("generator needs {} entries, found {}", d * d, entries.len()),
                    ));
                }
                generators.push(Matrix::new(d, d, entries)?);
            }
            other => return Err(syntax(line, format!("unknown key `{other}`"))),
        }
    }
    dimension.ok_or(FormatError::Missing("dimension"))?;
    Ok(GeneratorSet::new(generators)?)
}

pub fn write_generators(gen: &GeneratorSet) -> String {
    let mut out = format!("dimension {}\n", gen.dimension());
    for g in gen.generators() {
        out.push_str("generator");
        for v in g.data() {
            out.push(' ');
            out.push_str(&format_real(*v));
        }
        out.push('\n');
    }
    out
}

/// Parses a plant:
///
/// ```text
/// subsystems 2
/// subsystem 2 1
/// a 0 1 0 0
/// b 0 1
/// subsystem 0 0
/// ```
///
/// `a` and `b` lines are omitted when the corresponding block is empty.
pub fn parse_plant(text: &str) -> Result<Vec<Subsystem>, FormatError> {
    let mut declared: Option<usize> = None;
    let mut subsystems: Vec<Subsystem> = Vec::new();
    let mut pending: Option<(usize, usize, Option<Matrix>, Option<Matrix>)> = None;

    let flush = |pending: &mut Option<(usize, usize, Option<Matrix>, Option<Matrix>)>,
                 subsystems: &mut Vec<Subsystem>,
                 line: usize|
     -> Result<(), FormatError> {
        if let Some((d, m, a, b)) = pending.take() {
            let a = match a {
                Some(a) => a,
                None if d == 0 => Matrix::zeros(0, 0),
                None => return Err(syntax(line, "subsystem missing its `a` line")),
            };
            let b = match b {
                Some(b) => b,
                None => Matrix::zeros(d, m),
            };
            subsystems.push(Subsystem::new(a, b)?);
        }
        Ok(())
    };

    for (line, key, values) in tokenize(text) {
        match key {
            "subsystems" => declared = Some(parse_count(line, values.first(), "subsystem count")?),
            "subsystem" => {
                flush(&mut pending, &mut subsystems, line)?;
                let d = parse_count(line, values.first(), "state dimension")?;
                let m = parse_count(line, values.get(1), "input dimension")?;
                pending = Some((d, m, None, None));
            }
            "a" => {
                let Some((d, _, a_slot, _)) = pending.as_mut() else {
                    return Err(syntax(line, "`a` outside a subsystem block"));
                };
                let entries = parse_reals(line, &values)?;
                if entries.len() != *d * *d {
                    return Err(syntax(
                        line,
                        format!("`a` needs {} entries, found {}", *d * *d, entries.len()),
                    ));
                }
                *a_slot = Some(Matrix::new(*d, *d, entries)?);
            }
            "b" => {
                let Some((d, m, _, b_slot)) = pending.as_mut() else {
                    return Err(syntax(line, "`b` outside a subsystem block"));
                };
                let entries = parse_reals(line, &values)?;
                if entries.len() != *d * *m {
                    return Err(syntax(
                        line,
                        format!("`b` needs {} entries, found {}", *d * *m, entries.len()),
                    ));
                }
                *b_slot = Some(Matrix::new(*d, *m, entries)?);
            }
            other => return Err(syntax(line, format!("unknown key `{other}`"))),
        }
    }
    flush(&mut pending, &mut subsystems, 0)?;

    if let Some(n) = declared {
        if subsystems.len() != n {
            return Err(FormatError::Missing("subsystem (count mismatch)"));
        }
    }
    if subsystems.is_empty() {
        return Err(FormatError::Missing("subsystem"));
    }
    Ok(subsystems)
}

pub fn write_plant(subsystems: &[Subsystem]) -> String {
    let mut out = format!("subsystems {}\n", subsystems.len());
    for sub in subsystems {
        out.push_str(&format!(
            "subsystem {} {}\n",
            sub.state_dim(),
            sub.input_dim()
        ));
        if sub.state_dim() > 0 {
            out.push('a');
            for v in sub.a().data() {
                out.push(' ');
                out.push_str(&format_real(*v));
            }
            out.push('\n');
        }
        if sub.state_dim() * sub.input_dim() > 0 {
            out.push('b');
            for v in sub.b().data() {
                out.push(' ');
                out.push_str(&format_real(*v));
            }
            out.push('\n');
        }
    }
    out
}

/// Writes `content` to `path` atomically: a temp file in the same directory
/// is renamed over the destination.
pub fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let stem = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp_name = format!(".{stem}.tmp.{}", std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    let mut file = std::fs::File::create(&tmp)?;
    file.write_all(content.as_bytes())?;
    file.sync_all()?;
    drop(file);
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// FNV-1a 64-bit content hash, used in run manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip_is_bit_exact() {
        let m = Matrix::from_rows(&[&[0.1, 0.9], &[1.0 / 3.0, 2.0 / 3.0]]);
        let model = SwitchingModel::new(
            m,
            vec![
                DwellDistribution::LogNormal {
                    location: -0.12345678901234567,
                    scale: 0.7,
                },
                DwellDistribution::Uniform {
                    lower: 0.1,
                    upper: std::f64::consts::PI,
                },
            ],
        )
        .unwrap();
        let text = write_model(&model);
        let back = parse_model(&text).unwrap();
        assert_eq!(back.transition().data(), model.transition().data());
        assert_eq!(back.dwell(), model.dwell());
        assert_eq!(back.invariant_vector(), model.invariant_vector());
    }

    #[test]
    fn model_parse_reports_real_errors() {
        let bad = "modes 2\ntransition 0 1 1 0\ndwell dirac abc\ndwell dirac 1\n";
        assert!(matches!(
            parse_model(bad),
            Err(FormatError::Syntax { line: 3, .. })
        ));

        let missing = "modes 2\ndwell dirac 1\ndwell dirac 1\n";
        assert!(matches!(
            parse_model(missing),
            Err(FormatError::Missing("transition"))
        ));

        let row = "modes 2\ntransition 0.5 0.4 1 0\ndwell dirac 1\ndwell dirac 1\n";
        assert!(matches!(
            parse_model(row),
            Err(FormatError::Model(ModelError::RowSum { row: 0, .. }))
        ));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text =
            "# a model\nmodes 2\n\ntransition 0 1 1 0  # swap\ndwell dirac 1\ndwell dirac 2\n";
        let model = parse_model(text).unwrap();
        assert_eq!(model.modes(), 2);
        assert_eq!(model.dwell()[1], DwellDistribution::Dirac { value: 2.0 });
    }

    #[test]
    fn generators_round_trip() {
        let gen = GeneratorSet::new(vec![
            Matrix::from_rows(&[&[0.0, 1.0], &[-0.25, 1e-17]]),
            Matrix::from_rows(&[&[2.0, 0.0], &[0.125, -3.5]]),
        ])
        .unwrap();
        let text = write_generators(&gen);
        let back = parse_generators(&text).unwrap();
        assert_eq!(back, gen);
    }

    #[test]
    fn plant_round_trip_with_trivial_subsystem() {
        let subs = vec![
            Subsystem::new(
                Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]),
                Matrix::from_rows(&[&[0.0], &[1.0]]),
            )
            .unwrap(),
            Subsystem::trivial(),
        ];
        let text = write_plant(&subs);
        let back = parse_plant(&text).unwrap();
        assert_eq!(back, subs);
        assert_eq!(back[1].state_dim(), 0);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("randswitch_fmt_test_{}.txt", std::process::id()));
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn fnv_hash_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_ne!(fnv1a64(b"model a"), fnv1a64(b"model b"));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn format_real_round_trips_every_f64(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = format_real(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits(), "{}", s);
        }

        #[test]
        fn generator_files_round_trip(vals in proptest::collection::vec(-100.0f64..100.0, 8)) {
            let g1 = Matrix::new(2, 2, vals[0..4].to_vec()).unwrap();
            let g2 = Matrix::new(2, 2, vals[4..8].to_vec()).unwrap();
            let gen = GeneratorSet::new(vec![g1, g2]).unwrap();
            let back = parse_generators(&write_generators(&gen)).unwrap();
            prop_assert_eq!(back, gen);
        }
    }
}
