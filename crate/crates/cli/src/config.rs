//! Sectioned key=value experiment configs: `[section]` headers, `key = value`
//! lines, `#` comments. Unknown keys are rejected so parameter typos fail
//! loudly instead of silently using defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use snake_core::{Contour, Point, Region, ScalarField, SnakeParams, StopCriterion, StopSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Evolve,
    Certify,
    Modal,
    Capture,
}

#[derive(Debug)]
pub enum ContourSource {
    Csv(PathBuf),
    Circle {
        center: Point,
        radius: f64,
        points: usize,
    },
    Line {
        a: Point,
        b: Point,
        points: usize,
    },
}

#[derive(Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub field: ScalarField,
    pub contour: Option<ContourSource>,
    pub params: SnakeParams,
    pub region: Option<Region>,
    pub stop: Option<StopSpec>,
    pub out: Option<PathBuf>,
    pub render: bool,
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Default)]
struct Sections {
    map: BTreeMap<String, BTreeMap<String, Entry>>,
    section_lines: BTreeMap<String, usize>,
}

impl Sections {
    fn parse(text: &str) -> Result<Self> {
        let mut out = Sections::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_string();
                if out.map.contains_key(&name) {
                    bail!("line {line_no}: duplicate section [{name}]");
                }
                out.section_lines.insert(name.clone(), line_no);
                out.map.insert(name.clone(), BTreeMap::new());
                current = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected key = value, got {line:?}"))?;
            let section = current
                .as_ref()
                .ok_or_else(|| anyhow!("line {line_no}: key before any [section] header"))?;
            let key = key.trim().to_string();
            let entries = out.map.get_mut(section).unwrap();
            if entries.contains_key(&key) {
                bail!("line {line_no}: duplicate key {key:?} in [{section}]");
            }
            entries.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line: line_no,
                    used: false,
                },
            );
        }
        Ok(out)
    }

    fn section(&mut self, name: &str) -> Option<SectionView<'_>> {
        if self.map.contains_key(name) {
            Some(SectionView {
                name: name.to_string(),
                entries: self.map.get_mut(name).unwrap(),
            })
        } else {
            None
        }
    }

    fn require(&mut self, name: &str, kind: &str) -> Result<SectionView<'_>> {
        self.section(name)
            .ok_or_else(|| anyhow!("kind={kind} requires a [{name}] section"))
    }

    /// Every key must have been consumed; leftovers are typos.
    fn finish(self, allowed_sections: &[&str]) -> Result<()> {
        for (section, line) in &self.section_lines {
            if !allowed_sections.contains(&section.as_str()) {
                bail!("line {line}: section [{section}] is not used by this experiment kind");
            }
        }
        for (section, entries) in &self.map {
            for (key, entry) in entries {
                if !entry.used {
                    bail!(
                        "line {}: unknown key {key:?} in [{section}]",
                        entry.line
                    );
                }
            }
        }
        Ok(())
    }
}

struct SectionView<'a> {
    name: String,
    entries: &'a mut BTreeMap<String, Entry>,
}

impl SectionView<'_> {
    fn get(&mut self, key: &str) -> Option<&str> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            e.value.as_str()
        })
    }

    fn require(&mut self, key: &str) -> Result<&str> {
        let name = self.name.clone();
        self.get(key)
            .ok_or_else(|| anyhow!("missing key {key:?} in [{name}]"))
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.line).unwrap_or(0)
    }

    fn f64(&mut self, key: &str) -> Result<f64> {
        let raw = self.require(key)?.to_string();
        let line = self.line(key);
        raw.parse()
            .with_context(|| format!("line {line}: {key} = {raw:?} is not a number"))
    }

    fn f64_opt(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    fn usize(&mut self, key: &str) -> Result<usize> {
        let raw = self.require(key)?.to_string();
        let line = self.line(key);
        raw.parse()
            .with_context(|| format!("line {line}: {key} = {raw:?} is not a count"))
    }

    fn usize_opt(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.usize(key),
        }
    }

    fn bool_opt(&mut self, key: &str, default: bool) -> Result<bool> {
        let line = self.line(key);
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => bail!("line {line}: {key} = {other:?} is not true/false"),
        }
    }

    fn point(&mut self, x_key: &str, y_key: &str) -> Result<Point> {
        Ok(Point::new(self.f64(x_key)?, self.f64(y_key)?))
    }
}

fn parse_field(sec: &mut SectionView<'_>, base: &Path) -> Result<ScalarField> {
    let kind = sec.require("type")?.to_string();
    let field = match kind.as_str() {
        "quadratic" => ScalarField::quadratic(
            sec.point("center_x", "center_y")?,
            sec.f64("strength")?,
        )?,
        "gaussian" => ScalarField::gaussian(
            sec.point("center_x", "center_y")?,
            sec.f64("amplitude")?,
            sec.f64("sigma")?,
        )?,
        "annulus" => ScalarField::annulus(
            sec.point("center_x", "center_y")?,
            sec.f64("strength")?,
            sec.f64("radius")?,
        )?,
        "image" => {
            let path = base.join(sec.require("path")?);
            let sigma = sec.f64("sigma")?;
            let bytes = std::fs::read(&path)
                .with_context(|| format!("reading image {}", path.display()))?;
            let image = snake_core::load_pgm(&bytes)
                .with_context(|| format!("parsing {}", path.display()))?;
            snake_core::edge_potential(&image, sigma)?
        }
        other => {
            let line = sec.line("type");
            bail!("line {line}: unknown field type {other:?}");
        }
    };
    Ok(field)
}

fn parse_contour_source(sec: &mut SectionView<'_>, base: &Path) -> Result<ContourSource> {
    let source = sec.require("source")?.to_string();
    Ok(match source.as_str() {
        "csv" => ContourSource::Csv(base.join(sec.require("path")?)),
        "circle" => ContourSource::Circle {
            center: sec.point("center_x", "center_y")?,
            radius: sec.f64("radius")?,
            points: sec.usize("points")?,
        },
        "line" => ContourSource::Line {
            a: sec.point("ax", "ay")?,
            b: sec.point("bx", "by")?,
            points: sec.usize("points")?,
        },
        other => {
            let line = sec.line("source");
            bail!("line {line}: unknown contour source {other:?}");
        }
    })
}

fn parse_region(sec: &mut SectionView<'_>) -> Result<Region> {
    let samples = sec.usize_opt("boundary_samples", 256)?;
    let shape = sec.require("shape")?.to_string();
    Ok(match shape.as_str() {
        "disk" => Region::disk(
            sec.point("center_x", "center_y")?,
            sec.f64("radius")?,
            samples,
        )?,
        "rectangle" => Region::rectangle(
            sec.point("min_x", "min_y")?,
            sec.point("max_x", "max_y")?,
            samples,
        )?,
        other => {
            let line = sec.line("shape");
            bail!("line {line}: unknown region shape {other:?}");
        }
    })
}

fn parse_stop(sec: &mut SectionView<'_>) -> Result<StopSpec> {
    let raw = sec.require("criterion")?.to_string();
    let criterion = match raw.as_str() {
        "steady-state" => StopCriterion::SteadyState,
        "steady-support" => StopCriterion::SteadySupport,
        "both" => StopCriterion::Both,
        other => {
            let line = sec.line("criterion");
            bail!("line {line}: unknown stopping criterion {other:?}");
        }
    };
    Ok(StopSpec {
        criterion,
        epsilon: sec.f64("epsilon")?,
        max_iter: sec.usize("max_iter")?,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut sections = Sections::parse(&text)?;

    let (kind, out, render) = {
        let mut exp = sections
            .section("experiment")
            .ok_or_else(|| anyhow!("missing [experiment] section"))?;
        let kind_raw = exp.require("kind")?.to_string();
        let kind = match kind_raw.as_str() {
            "evolve" => Kind::Evolve,
            "certify" => Kind::Certify,
            "modal" => Kind::Modal,
            "capture" => Kind::Capture,
            other => {
                let line = exp.line("kind");
                bail!("line {line}: unknown experiment kind {other:?}");
            }
        };
        let out = exp.get("out").map(|s| base.join(s));
        let render = exp.bool_opt("render", false)?;
        (kind, out, render)
    };

    let params = {
        let mut sec = sections.require("params", kind_name(kind))?;
        SnakeParams::new(
            sec.f64_opt("omega1", 0.0)?,
            sec.f64_opt("omega2", 0.0)?,
            sec.f64("mu")?,
            sec.f64("gamma")?,
            sec.f64("tau")?,
        )?
    };
    let field = parse_field(&mut sections.require("field", kind_name(kind))?, &base)?;

    let needs_contour = matches!(kind, Kind::Evolve | Kind::Modal | Kind::Capture);
    let contour = if needs_contour {
        Some(parse_contour_source(
            &mut sections.require("contour", kind_name(kind))?,
            &base,
        )?)
    } else {
        None
    };
    let needs_region = matches!(kind, Kind::Certify | Kind::Capture);
    let region = if needs_region {
        Some(parse_region(&mut sections.require("region", kind_name(kind))?)?)
    } else {
        None
    };
    let needs_stop = matches!(kind, Kind::Evolve | Kind::Capture);
    let stop = if needs_stop {
        Some(parse_stop(&mut sections.require("stop", kind_name(kind))?)?)
    } else {
        None
    };

    let mut allowed = vec!["experiment", "params", "field"];
    if needs_contour {
        allowed.push("contour");
    }
    if needs_region {
        allowed.push("region");
    }
    if needs_stop {
        allowed.push("stop");
    }
    sections.finish(&allowed)?;

    Ok(ExperimentConfig {
        kind,
        field,
        contour,
        params,
        region,
        stop,
        out,
        render,
    })
}

pub fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Evolve => "evolve",
        Kind::Certify => "certify",
        Kind::Modal => "modal",
        Kind::Capture => "capture",
    }
}

pub fn build_contour(source: &ContourSource) -> Result<Contour> {
    Ok(match source {
        ContourSource::Csv(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading contour {}", path.display()))?;
            Contour::from_csv(&text)?
        }
        ContourSource::Circle {
            center,
            radius,
            points,
        } => Contour::circle(*center, *radius, *points)?,
        ContourSource::Line { a, b, points } => Contour::line(*a, *b, *points)?,
    })
}
