//! Scene description: a sectioned `key = value` text format, its parser and
//! serializer, and the built-in presets.
//!
//! ```text
//! # comment
//! [materials]
//! host = 12+0.1i
//!
//! [lattice]
//! kind = hexagonal        # or square
//! constant = 0.7071067811865476
//! sphere = vacuum         # material inside the spheres
//! radius = 0.3061862178478972
//!
//! [stack]
//! incident = vacuum
//! interface = host        # change of medium
//! gap = 0.0175            # free propagation in the current medium
//! repeat = 4              # block closed by a bare `end`
//! plane = 0 0 0.2887 0.2887   # offset x y, spacing left, right
//! end
//! plate = 0.6 glass       # thickness material
//! exit = substrate 7e8 absorber vacuum   # or: exit = halfspace <material>
//!
//! [sweep]
//! omega = 1.4:3.0:150     # lo:hi:count, or a comma-separated list
//! theta = 0:60:13         # degrees
//! units = angular         # omega a/c; `ordinary` for f a/c
//! threshold = 0.2
//! planck_x0 = 0.5         # optional
//!
//! [numerics]
//! lmax = 7
//! cutoff = auto
//! min_rcond = 1e-13
//! engine = auto           # auto, layered or onedim
//! ```
//!
//! `vacuum` is predefined. Sphere planes take their host from the medium
//! they sit in.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::emissivity::{Engine, GAP_THRESHOLD};
use crate::error::{ConfigErrors, Error, Result};
use crate::lattice::Lattice2D;
use crate::layer::{PlaneOfSpheres, Plate};
use crate::mie::{Material, SphereScatterer};
use crate::numeric::C64;
use crate::stack::{Element, Exit, NumericalControls, StackDescription};
use crate::structure::SumMethod;

/// Frequency convention of the sweep grid and of the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    /// `ω a / c`
    #[default]
    Angular,
    /// `f a / c = ω a / (2π c)`
    Ordinary,
}

impl Units {
    pub fn parse(s: &str) -> Option<Units> {
        match s {
            "angular" => Some(Units::Angular),
            "ordinary" => Some(Units::Ordinary),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Units::Angular => "angular",
            Units::Ordinary => "ordinary",
        }
    }

    /// Angular frequency `ω a / c` of a grid value.
    pub fn to_angular(self, x: f64) -> f64 {
        match self {
            Units::Angular => x,
            Units::Ordinary => 2.0 * PI * x,
        }
    }

    pub fn from_angular(self, w: f64) -> f64 {
        match self {
            Units::Angular => w,
            Units::Ordinary => w / (2.0 * PI),
        }
    }

    /// Column header for frequencies.
    pub fn header(self) -> &'static str {
        match self {
            Units::Angular => "omega [omega*a/c]",
            Units::Ordinary => "freq [f*a/c]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    Range {
        lo: f64,
        hi: f64,
        count: usize,
    },
    List(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Range { lo, hi, count } => {
                if *count == 1 {
                    return vec![*lo];
                }
                (0..*count)
                    .map(|i| lo + (hi - lo) * i as f64 / (*count - 1) as f64)
                    .collect()
            }
            Grid::List(v) => v.clone(),
        }
    }

    fn parse(s: &str) -> std::result::Result<Grid, String> {
        let g = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(format!("range `{s}` must be lo:hi:count"));
            }
            let count = parts[2]
                .parse::<usize>()
                .map_err(|_| format!("bad count `{}`", parts[2]))?;
            Grid::Range {
                lo: parse_f64(parts[0])?,
                hi: parse_f64(parts[1])?,
                count,
            }
        } else {
            Grid::List(
                s.split(',')
                    .map(|x| parse_f64(x.trim()))
                    .collect::<std::result::Result<_, _>>()?,
            )
        };
        let v = g.values();
        if v.is_empty() {
            return Err("grid is empty".into());
        }
        if !v.windows(2).all(|w| w[1] > w[0]) {
            return Err("grid must be strictly increasing".into());
        }
        Ok(g)
    }

    fn render(&self) -> String {
        match self {
            Grid::Range { lo, hi, count } => format!("{lo}:{hi}:{count}"),
            Grid::List(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    Square,
    Hexagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub constant: f64,
    pub sphere: String,
    pub radius: f64,
}

impl LatticeSpec {
    pub fn lattice(&self) -> Lattice2D {
        match self.kind {
            LatticeKind::Square => Lattice2D::square(self.constant),
            LatticeKind::Hexagonal => Lattice2D::hexagonal(self.constant),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementSpec {
    Interface(String),
    Gap(f64),
    Plate { thickness: f64, material: String },
    Plane { offset: [f64; 2], left: f64, right: f64 },
    Repeat(i64, Vec<ElementSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExitSpec {
    HalfSpace(String),
    Substrate {
        thickness: f64,
        material: String,
        behind: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub incident: String,
    pub elements: Vec<ElementSpec>,
    pub exit: ExitSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub omega: Grid,
    /// Degrees.
    pub theta: Grid,
    pub units: Units,
    pub threshold: f64,
    pub planck_x0: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            omega: Grid::Range {
                lo: 1.0,
                hi: 3.0,
                count: 101,
            },
            theta: Grid::List(vec![0.0]),
            units: Units::Angular,
            threshold: GAP_THRESHOLD,
            planck_x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsSpec {
    pub lmax: usize,
    pub cutoff: Option<f64>,
    pub min_rcond: f64,
    pub engine: Engine,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        let c = NumericalControls::default();
        NumericsSpec {
            lmax: c.lmax,
            cutoff: c.cutoff,
            min_rcond: c.min_rcond,
            engine: Engine::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// User materials in definition order; `vacuum` is implicit.
    pub materials: Vec<(String, C64)>,
    pub lattice: Option<LatticeSpec>,
    pub stack: StackSpec,
    pub sweep: SweepSpec,
    pub numerics: NumericsSpec,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{s}` is not a complex number");
    let Some(body) = t.strip_suffix('i') else {
        return Ok(C64::new(parse_f64(&t).map_err(|_| bad())?, 0.0));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    Ok(C64::new(
        parse_f64(re).map_err(|_| bad())?,
        parse_f64(im.trim_start_matches('+')).map_err(|_| bad())?,
    ))
}

fn render_complex(z: C64) -> String {
    if z.im == 0.0 {
        z.re.to_string()
    } else if z.im < 0.0 || z.im.is_sign_negative() {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Auto => "auto",
        Engine::Layered => "layered",
        Engine::OneDim => "onedim",
    }
}

const SECTIONS: [&str; 5] = ["materials", "lattice", "stack", "sweep", "numerics"];

struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Default)]
struct Collector(Vec<(usize, String)>);

impl Collector {
    fn push(&mut self, line: usize, msg: impl Into<String>) {
        self.0.push((line, msg.into()));
    }
}

/// Parse a scene, reporting every error found with its line number.
pub fn parse_config(text: &str) -> Result<Scene> {
    let mut errs = Collector::default();
    let mut sections: Vec<(String, usize, Vec<Entry>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                errs.push(line, format!("malformed section header `{s}`"));
                continue;
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                errs.push(line, format!("unknown section [{name}]"));
            } else if sections.iter().any(|(n, _, _)| n == name) {
                errs.push(line, format!("section [{name}] appears twice"));
            }
            sections.push((name.to_string(), line, Vec::new()));
            continue;
        }
        let (key, value) = match s.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None if s == "end" => ("end", ""),
            None => {
                errs.push(line, format!("expected `key = value`, found `{s}`"));
                continue;
            }
        };
        match sections.last_mut() {
            Some((_, _, entries)) => entries.push(Entry {
                line,
                key: key.to_string(),
                value: value.to_string(),
            }),
            None => errs.push(line, "entry outside any section"),
        }
    }
    let section = |name: &str| sections.iter().find(|(n, _, _)| n == name);

    // materials
    let mut materials: Vec<(String, C64)> = Vec::new();
    if let Some((_, _, entries)) = section("materials") {
        for e in entries {
            if e.key == "vacuum" || !e.key.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
                errs.push(e.line, format!("invalid material name `{}`", e.key));
                continue;
            }
            if materials.iter().any(|(n, _)| *n == e.key) {
                errs.push(e.line, format!("material `{}` defined twice", e.key));
                continue;
            }
            match parse_complex(&e.value).and_then(|z| Material::new(z).map(|_| z).map_err(|e| e.to_string())) {
                Ok(z) => materials.push((e.key.clone(), z)),
                Err(m) => errs.push(e.line, m),
            }
        }
    }
    let known: BTreeSet<&str> = materials.iter().map(|(n, _)| n.as_str()).chain(["vacuum"]).collect();
    let check_mat = |errs: &mut Collector, line: usize, name: &str| {
        if !known.contains(name) {
            errs.push(line, format!("unknown material `{name}`"));
        }
    };

    // lattice
    let lattice = section("lattice").map(|(_, hline, entries)| {
        let (mut kind, mut constant, mut sphere, mut radius) = (None, None, None, None);
        for e in entries {
            match e.key.as_str() {
                "kind" => match e.value.as_str() {
                    "square" => kind = Some(LatticeKind::Square),
                    "hexagonal" => kind = Some(LatticeKind::Hexagonal),
                    v => errs.push(e.line, format!("lattice kind `{v}` must be square or hexagonal")),
                },
                "constant" | "radius" => match parse_f64(&e.value) {
                    Ok(v) if v > 0.0 => {
                        if e.key == "constant" {
                            constant = Some(v)
                        } else {
                            radius = Some(v)
                        }
                    }
                    Ok(v) => errs.push(e.line, format!("{} = {v} must be > 0", e.key)),
                    Err(m) => errs.push(e.line, m),
                },
                "sphere" => {
                    check_mat(&mut errs, e.line, &e.value);
                    sphere = Some(e.value.clone());
                }
                k => errs.push(e.line, format!("unknown key `{k}` in [lattice]")),
            }
        }
        let mut missing = |what: &str| errs.push(*hline, format!("[lattice] needs `{what}`"));
        if kind.is_none() {
            missing("kind");
        }
        if constant.is_none() {
            missing("constant");
        }
        if sphere.is_none() {
            missing("sphere");
        }
        if radius.is_none() {
            missing("radius");
        }
        LatticeSpec {
            kind: kind.unwrap_or(LatticeKind::Hexagonal),
            constant: constant.unwrap_or(1.0),
            sphere: sphere.unwrap_or_else(|| "vacuum".into()),
            radius: radius.unwrap_or(0.1),
        }
    });

    // stack
    let mut stack = StackSpec {
        incident: "vacuum".into(),
        elements: Vec::new(),
        exit: ExitSpec::HalfSpace("vacuum".into()),
    };
    match section("stack") {
        None => errs.push(0, "missing [stack] section"),
        Some((_, hline, entries)) => {
            let mut blocks: Vec<(usize, i64, Vec<ElementSpec>)> = vec![(*hline, 0, Vec::new())];
            let mut have_exit = false;
            for e in entries {
                let fields: Vec<&str> = e.value.split_whitespace().collect();
                let nums = |errs: &mut Collector, want: usize| -> Option<Vec<f64>> {
                    if fields.len() != want {
                        errs.push(e.line, format!("`{}` takes {want} values", e.key));
                        return None;
                    }
                    let v: std::result::Result<Vec<f64>, String> = fields.iter().map(|f| parse_f64(f)).collect();
                    v.map_err(|m| errs.push(e.line, m)).ok()
                };
                let el = match e.key.as_str() {
                    "incident" => {
                        check_mat(&mut errs, e.line, &e.value);
                        stack.incident = e.value.clone();
                        continue;
                    }
                    "exit" => {
                        have_exit = true;
                        match fields.as_slice() {
                            ["halfspace", m] => {
                                check_mat(&mut errs, e.line, m);
                                stack.exit = ExitSpec::HalfSpace(m.to_string());
                            }
                            ["substrate", t, m, b] => {
                                check_mat(&mut errs, e.line, m);
                                check_mat(&mut errs, e.line, b);
                                match parse_f64(t) {
                                    Ok(t) if t >= 0.0 => {
                                        stack.exit = ExitSpec::Substrate {
                                            thickness: t,
                                            material: m.to_string(),
                                            behind: b.to_string(),
                                        }
                                    }
                                    Ok(t) => errs.push(e.line, format!("substrate thickness {t} must be >= 0")),
                                    Err(m) => errs.push(e.line, m),
                                }
                            }
                            _ => errs.push(
                                e.line,
                                "exit must be `halfspace <material>` or `substrate <thickness> <material> <behind>`",
                            ),
                        }
                        continue;
                    }
                    "interface" => {
                        check_mat(&mut errs, e.line, &e.value);
                        Some(ElementSpec::Interface(e.value.clone()))
                    }
                    "gap" => nums(&mut errs, 1).and_then(|v| {
                        if v[0] < 0.0 {
                            errs.push(e.line, "gap must be >= 0");
                            None
                        } else {
                            Some(ElementSpec::Gap(v[0]))
                        }
                    }),
                    "plate" => {
                        if fields.len() != 2 {
                            errs.push(e.line, "`plate` takes a thickness and a material");
                            None
                        } else {
                            check_mat(&mut errs, e.line, fields[1]);
                            match parse_f64(fields[0]) {
                                Ok(t) if t >= 0.0 => Some(ElementSpec::Plate {
                                    thickness: t,
                                    material: fields[1].to_string(),
                                }),
                                Ok(_) => {
                                    errs.push(e.line, "plate thickness must be >= 0");
                                    None
                                }
                                Err(m) => {
                                    errs.push(e.line, m);
                                    None
                                }
                            }
                        }
                    }
                    "plane" => nums(&mut errs, 4).and_then(|v| {
                        if lattice.is_none() {
                            errs.push(e.line, "sphere planes need a [lattice] section");
                            None
                        } else if v[2] < 0.0 || v[3] < 0.0 {
                            errs.push(e.line, "plane spacings must be >= 0");
                            None
                        } else {
                            Some(ElementSpec::Plane {
                                offset: [v[0], v[1]],
                                left: v[2],
                                right: v[3],
                            })
                        }
                    }),
                    "repeat" => {
                        match e.value.parse::<i64>() {
                            Ok(n) if n >= 0 => blocks.push((e.line, n, Vec::new())),
                            _ => {
                                errs.push(e.line, format!("repeat count `{}` must be an integer >= 0", e.value));
                                blocks.push((e.line, 0, Vec::new()));
                            }
                        }
                        continue;
                    }
                    "end" => {
                        if !e.value.is_empty() {
                            errs.push(e.line, "`end` takes no value");
                        }
                        if blocks.len() < 2 {
                            errs.push(e.line, "`end` without `repeat`");
                            continue;
                        }
                        let (rline, n, body) = blocks.pop().unwrap();
                        if body.is_empty() {
                            errs.push(rline, "repeat block is empty");
                        }
                        Some(ElementSpec::Repeat(n, body))
                    }
                    k => {
                        errs.push(e.line, format!("unknown key `{k}` in [stack]"));
                        None
                    }
                };
                if let Some(el) = el {
                    blocks.last_mut().unwrap().2.push(el);
                }
            }
            while blocks.len() > 1 {
                let (rline, _, _) = blocks.pop().unwrap();
                errs.push(rline, "`repeat` without `end`");
            }
            stack.elements = blocks.pop().unwrap().2;
            if stack.elements.is_empty() {
                errs.push(*hline, "stack must contain at least one element");
            }
            if !have_exit {
                errs.push(*hline, "[stack] needs `exit`");
            }
        }
    }

    // sweep
    let mut sweep = SweepSpec::default();
    if let Some((_, _, entries)) = section("sweep") {
        for e in entries {
            match e.key.as_str() {
                "omega" | "theta" => match Grid::parse(&e.value) {
                    Ok(g) => {
                        let v = g.values();
                        if e.key == "omega" {
                            if v[0] <= 0.0 {
                                errs.push(e.line, "frequencies must be > 0");
                            }
                            sweep.omega = g;
                        } else {
                            if v[0] < 0.0 || *v.last().unwrap() >= 90.0 {
                                errs.push(e.line, "angles must lie in [0, 90) degrees");
                            }
                            sweep.theta = g;
                        }
                    }
                    Err(m) => errs.push(e.line, m),
                },
                "units" => match Units::parse(&e.value) {
                    Some(u) => sweep.units = u,
                    None => errs.push(e.line, format!("units `{}` must be angular or ordinary", e.value)),
                },
                "threshold" => match parse_f64(&e.value) {
                    Ok(v) if v > 0.0 && v < 1.0 => sweep.threshold = v,
                    Ok(v) => errs.push(e.line, format!("threshold {v} must lie in (0, 1)")),
                    Err(m) => errs.push(e.line, m),
                },
                "planck_x0" => match parse_f64(&e.value) {
                    Ok(v) if v > 0.0 => sweep.planck_x0 = Some(v),
                    Ok(v) => errs.push(e.line, format!("planck_x0 {v} must be > 0")),
                    Err(m) => errs.push(e.line, m),
                },
                k => errs.push(e.line, format!("unknown key `{k}` in [sweep]")),
            }
        }
    }

    // numerics
    let mut numerics = NumericsSpec::default();
    if let Some((_, _, entries)) = section("numerics") {
        for e in entries {
            match e.key.as_str() {
                "lmax" => match e.value.parse::<usize>() {
                    Ok(l) if (1..=30).contains(&l) => numerics.lmax = l,
                    _ => errs.push(e.line, format!("lmax `{}` must be an integer in 1..=30", e.value)),
                },
                "cutoff" => {
                    if e.value == "auto" {
                        numerics.cutoff = None;
                    } else {
                        match parse_f64(&e.value) {
                            Ok(v) if v > 0.0 => numerics.cutoff = Some(v),
                            _ => errs.push(e.line, format!("cutoff `{}` must be `auto` or > 0", e.value)),
                        }
                    }
                }
                "min_rcond" => match parse_f64(&e.value) {
                    Ok(v) if v > 0.0 && v < 1.0 => numerics.min_rcond = v,
                    _ => errs.push(e.line, format!("min_rcond `{}` must lie in (0, 1)", e.value)),
                },
                "engine" => match e.value.as_str() {
                    "auto" => numerics.engine = Engine::Auto,
                    "layered" => numerics.engine = Engine::Layered,
                    "onedim" => numerics.engine = Engine::OneDim,
                    v => errs.push(e.line, format!("engine `{v}` must be auto, layered or onedim")),
                },
                k => errs.push(e.line, format!("unknown key `{k}` in [numerics]")),
            }
        }
    }

    if errs.0.is_empty() {
        let scene = Scene {
            materials,
            lattice,
            stack,
            sweep,
            numerics,
        };
        // physical consistency, located at the offending stack line
        if let Err(e) = scene.description() {
            let line = section("stack").map(|s| s.1).unwrap_or(0);
            let line = lattice_error_line(&e, &sections).unwrap_or(line);
            errs.push(line, e.to_string());
        } else {
            return Ok(scene);
        }
    }
    errs.0.sort_by_key(|(l, _)| *l);
    Err(Error::ConfigList(ConfigErrors(errs.0)))
}

/// Sphere-overlap errors belong to the radius line.
fn lattice_error_line(e: &Error, sections: &[(String, usize, Vec<Entry>)]) -> Option<usize> {
    if !e.to_string().contains("overlap") {
        return None;
    }
    let (_, _, entries) = sections.iter().find(|(n, _, _)| n == "lattice")?;
    entries.iter().find(|e| e.key == "radius").map(|e| e.line)
}

impl Scene {
    pub fn material(&self, name: &str) -> Result<Material> {
        if name == "vacuum" {
            return Ok(Material::vacuum());
        }
        let (_, eps) = self
            .materials
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown material `{name}`")))?;
        Material::new(*eps)
    }

    /// The solver's view of the scene.
    pub fn description(&self) -> Result<StackDescription> {
        let incident = self.material(&self.stack.incident)?;
        let mut medium = incident;
        let elements = self.elements(&self.stack.elements, &mut medium)?;
        let exit = match &self.stack.exit {
            ExitSpec::HalfSpace(m) => Exit::HalfSpace(self.material(m)?),
            ExitSpec::Substrate {
                thickness,
                material,
                behind,
            } => Exit::Substrate {
                plate: Plate::new(*thickness, self.material(material)?)?,
                behind: self.material(behind)?,
            },
        };
        let desc = StackDescription {
            incident,
            elements,
            exit,
        };
        desc.validate()?;
        Ok(desc)
    }

    fn elements(&self, specs: &[ElementSpec], medium: &mut Material) -> Result<Vec<Element>> {
        let mut out = Vec::new();
        for s in specs {
            out.push(match s {
                ElementSpec::Interface(m) => {
                    *medium = self.material(m)?;
                    Element::Interface(*medium)
                }
                ElementSpec::Gap(d) => Element::Gap(*d),
                ElementSpec::Plate { thickness, material } => {
                    Element::Plate(Plate::new(*thickness, self.material(material)?)?)
                }
                ElementSpec::Plane { offset, left, right } => {
                    let lat = self
                        .lattice
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument("sphere plane without a lattice".into()))?;
                    let sphere = SphereScatterer::new(lat.radius, self.material(&lat.sphere)?, *medium)?;
                    Element::Plane {
                        plane: PlaneOfSpheres::new(lat.lattice(), sphere, *offset)?,
                        left: *left,
                        right: *right,
                    }
                }
                ElementSpec::Repeat(n, body) => Element::Repeat(self.elements(body, medium)?, *n),
            });
        }
        Ok(out)
    }

    pub fn controls(&self) -> NumericalControls {
        NumericalControls {
            lmax: self.numerics.lmax,
            cutoff: self.numerics.cutoff,
            cutoff_scale: 1.0,
            min_rcond: self.numerics.min_rcond,
            sums: SumMethod::Ewald { eta: None },
        }
    }

    /// Sweep frequencies as `ω a / c`.
    pub fn omega_grid(&self) -> Vec<f64> {
        self.sweep
            .omega
            .values()
            .into_iter()
            .map(|x| self.sweep.units.to_angular(x))
            .collect()
    }

    /// Sweep angles in radians.
    pub fn theta_grid(&self) -> Vec<f64> {
        self.sweep.theta.values().into_iter().map(f64::to_radians).collect()
    }

    /// The first repeated block and the medium it sits in: the unit slice
    /// of the crystal.
    pub fn unit_slice(&self) -> Result<(Vec<ElementSpec>, i64)> {
        fn find(els: &[ElementSpec]) -> Option<(Vec<ElementSpec>, i64)> {
            els.iter().find_map(|e| match e {
                ElementSpec::Repeat(n, body) => Some((body.clone(), *n)),
                _ => None,
            })
        }
        find(&self.stack.elements).ok_or_else(|| Error::InvalidArgument("the stack has no repeated block".into()))
    }

    /// Unit slice as solver elements plus the medium around it.
    pub fn unit_description(&self) -> Result<(Vec<Element>, Material, f64)> {
        fn walk(scene: &Scene, els: &[ElementSpec], medium: &mut Material) -> Result<Option<(Vec<Element>, Material)>> {
            for e in els {
                match e {
                    ElementSpec::Interface(m) => *medium = scene.material(m)?,
                    ElementSpec::Repeat(_, body) => {
                        let host = *medium;
                        return Ok(Some((scene.elements(body, medium)?, host)));
                    }
                    _ => {}
                }
            }
            Ok(None)
        }
        let mut medium = self.material(&self.stack.incident)?;
        let (els, host) = walk(self, &self.stack.elements, &mut medium)?
            .ok_or_else(|| Error::InvalidArgument("the stack has no repeated block".into()))?;
        let period = thickness(&els);
        Ok((els, host, period))
    }

    /// A copy with every material made lossless (imaginary parts dropped).
    pub fn lossless(&self) -> Scene {
        let mut s = self.clone();
        for (_, z) in s.materials.iter_mut() {
            z.im = 0.0;
        }
        s
    }

    /// A copy with every repeat count at the top level set to `n`.
    pub fn with_periods(&self, n: i64) -> Scene {
        let mut s = self.clone();
        for e in s.stack.elements.iter_mut() {
            if let ElementSpec::Repeat(k, _) = e {
                *k = n;
            }
        }
        s
    }

    /// Serialize to the text format; parsing the result gives back `self`.
    pub fn to_config(&self) -> String {
        let mut o = String::new();
        o.push_str("[materials]\n");
        for (n, z) in &self.materials {
            let _ = writeln!(o, "{n} = {}", render_complex(*z));
        }
        if let Some(l) = &self.lattice {
            let kind = match l.kind {
                LatticeKind::Square => "square",
                LatticeKind::Hexagonal => "hexagonal",
            };
            let _ = write!(
                o,
                "\n[lattice]\nkind = {kind}\nconstant = {}\nsphere = {}\nradius = {}\n",
                l.constant, l.sphere, l.radius
            );
        }
        o.push_str("\n[stack]\n");
        let _ = writeln!(o, "incident = {}", self.stack.incident);
        fn els(o: &mut String, list: &[ElementSpec], depth: usize) {
            let pad = "  ".repeat(depth);
            for e in list {
                let _ = match e {
                    ElementSpec::Interface(m) => writeln!(o, "{pad}interface = {m}"),
                    ElementSpec::Gap(d) => writeln!(o, "{pad}gap = {d}"),
                    ElementSpec::Plate { thickness, material } => writeln!(o, "{pad}plate = {thickness} {material}"),
                    ElementSpec::Plane { offset, left, right } => {
                        writeln!(o, "{pad}plane = {} {} {left} {right}", offset[0], offset[1])
                    }
                    ElementSpec::Repeat(n, body) => {
                        let _ = writeln!(o, "{pad}repeat = {n}");
                        els(o, body, depth + 1);
                        writeln!(o, "{pad}end")
                    }
                };
            }
        }
        els(&mut o, &self.stack.elements, 0);
        let _ = match &self.stack.exit {
            ExitSpec::HalfSpace(m) => writeln!(o, "exit = halfspace {m}"),
            ExitSpec::Substrate {
                thickness,
                material,
                behind,
            } => {
                writeln!(o, "exit = substrate {thickness} {material} {behind}")
            }
        };
        let s = &self.sweep;
        let _ = write!(
            o,
            "\n[sweep]\nomega = {}\ntheta = {}\nunits = {}\nthreshold = {}\n",
            s.omega.render(),
            s.theta.render(),
            s.units.name(),
            s.threshold
        );
        if let Some(x0) = s.planck_x0 {
            let _ = writeln!(o, "planck_x0 = {x0}");
        }
        let n = &self.numerics;
        let cutoff = n.cutoff.map_or("auto".to_string(), |c| c.to_string());
        let _ = write!(
            o,
            "\n[numerics]\nlmax = {}\ncutoff = {cutoff}\nmin_rcond = {}\nengine = {}\n",
            n.lmax,
            n.min_rcond,
            engine_name(n.engine)
        );
        o
    }
}

/// Total thickness of a list of elements (sphere planes count their two
/// spacings).
pub fn thickness(els: &[Element]) -> f64 {
    els.iter()
        .map(|e| match e {
            Element::Plane { left, right, .. } => left + right,
            Element::Plate(p) => p.thickness,
            Element::Interface(_) => 0.0,
            Element::Gap(d) => *d,
            Element::Repeat(body, n) => *n as f64 * thickness(body),
        })
        .sum()
}

const FIG2: &str = "\
# Inverted opal: air spheres in a fcc host, four periods of (111) planes
# on an absorbing substrate. Lengths in units of the cubic lattice constant.
[materials]
host = 12+0.1i
absorber = 12+7i

[lattice]
kind = hexagonal
constant = 0.7071067811865476
sphere = vacuum
radius = 0.30618621784789724

[stack]
incident = vacuum
interface = host
gap = 0.017511083253084314
repeat = 4
  plane = 0 0 0.2886751345948129 0.2886751345948129
  plane = 0.35355339059327373 0.2041241452319315 0.2886751345948129 0.2886751345948129
  plane = 0 0.408248290463863 0.2886751345948129 0.2886751345948129
end
gap = 0.017511083253084314
exit = substrate 696322539.6781679 absorber vacuum

[sweep]
omega = 1.4:3.2:150
theta = 0:60:13
units = angular
threshold = 0.2

[numerics]
lmax = 7
cutoff = auto
min_rcond = 1e-13
engine = auto
";

const FIG3: &str = "\
# Sixteen-period dielectric multilayer on the absorbing substrate.
[materials]
high = 2.6
low = 1.44
absorber = 12+7i

[stack]
incident = vacuum
repeat = 16
  plate = 0.6 high
  plate = 0.81 low
end
exit = halfspace absorber

[sweep]
omega = 0.8:3.0:441
theta = 0, 20, 40, 60
units = angular
threshold = 0.2

[numerics]
lmax = 7
cutoff = auto
min_rcond = 1e-13
engine = auto
";

const FIG4: &str = "\
# Lossless inverted opal, host eps = 22, free-standing: band structure of the
# (111) slice and transmission through eight periods.
[materials]
host = 22

[lattice]
kind = hexagonal
constant = 0.7071067811865476
sphere = vacuum
radius = 0.30618621784789724

[stack]
incident = vacuum
interface = host
gap = 0.017511083253084314
repeat = 8
  plane = 0 0 0.2886751345948129 0.2886751345948129
  plane = 0.35355339059327373 0.2041241452319315 0.2886751345948129 0.2886751345948129
  plane = 0 0.408248290463863 0.2886751345948129 0.2886751345948129
end
gap = 0.017511083253084314
exit = halfspace vacuum

[sweep]
omega = 1.0:2.6:161
theta = 0
units = angular
threshold = 0.2

[numerics]
lmax = 7
cutoff = auto
min_rcond = 1e-13
engine = auto
";

pub const PRESETS: [&str; 3] = ["paper-fig2", "paper-fig3", "paper-fig4"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "paper-fig2" => Some(FIG2),
        "paper-fig3" => Some(FIG3),
        "paper-fig4" => Some(FIG4),
        _ => None,
    }
}

pub fn preset(name: &str) -> Result<Scene> {
    let text = preset_text(name).ok_or_else(|| {
        Error::InvalidArgument(format!("unknown preset `{name}` (available: {})", PRESETS.join(", ")))
    })?;
    parse_config(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines_of(e: Error) -> Vec<(usize, String)> {
        match e {
            Error::ConfigList(ConfigErrors(v)) => v,
            e => panic!("{e}"),
        }
    }

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("12+0.1i").unwrap(), C64::new(12.0, 0.1));
        assert_eq!(parse_complex("12 + 7i").unwrap(), C64::new(12.0, 7.0));
        assert_eq!(parse_complex("2.5").unwrap(), C64::new(2.5, 0.0));
        assert_eq!(parse_complex("-1e-3-2e+2i").unwrap(), C64::new(-1e-3, -200.0));
        assert_eq!(parse_complex("3i").unwrap(), C64::new(0.0, 3.0));
        assert_eq!(parse_complex("1+i").unwrap(), C64::new(1.0, 1.0));
        assert!(parse_complex("12+x").is_err());
        for z in [C64::new(12.0, 0.1), C64::new(-0.5, -3.0), C64::new(1e-20, 0.0)] {
            assert_eq!(parse_complex(&render_complex(z)).unwrap(), z);
        }
    }

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let s = preset(name).unwrap();
            let again = parse_config(&s.to_config()).unwrap();
            assert_eq!(s, again, "{name}");
            assert_eq!(again.to_config(), s.to_config());
        }
    }

    #[test]
    fn opal_preset_constants() {
        let s = preset("paper-fig2").unwrap();
        let d = s.description().unwrap();
        assert_eq!(s.material("host").unwrap().eps, C64::new(12.0, 0.1));
        assert_eq!(s.material("absorber").unwrap().eps, C64::new(12.0, 7.0));
        assert!((s.lattice.as_ref().unwrap().radius - 0.30618621).abs() < 1e-8);
        assert_eq!(d.incident, Material::vacuum());
        let (els, host, period) = s.unit_description().unwrap();
        assert_eq!(els.len(), 3);
        assert_eq!(host.eps, C64::new(12.0, 0.1));
        assert!((period - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.omega_grid().len(), 150);
        assert_eq!(s.theta_grid().len(), 13);
    }

    #[test]
    fn multilayer_and_band_preset_constants() {
        let s = preset("paper-fig3").unwrap();
        assert_eq!(s.materials[0], ("high".to_string(), C64::new(2.6, 0.0)));
        assert_eq!(s.materials[1], ("low".to_string(), C64::new(1.44, 0.0)));
        let (els, _, period) = s.unit_description().unwrap();
        assert_eq!(els.len(), 2);
        assert!((period - 1.41).abs() < 1e-12);
        assert_eq!(s.unit_slice().unwrap().1, 16);
        let s = preset("paper-fig4").unwrap();
        assert_eq!(s.material("host").unwrap().eps, C64::new(22.0, 0.0));
        assert_eq!(s.description().unwrap().exit, Exit::HalfSpace(Material::vacuum()));
        assert!(preset("fig5").is_err());
    }

    #[test]
    fn empty_stack_is_rejected() {
        let e = lines_of(parse_config("[stack]\nexit = halfspace vacuum\n").unwrap_err());
        assert_eq!(e, vec![(1, "stack must contain at least one element".to_string())]);
    }

    #[test]
    fn errors_carry_lines() {
        let text = "\
[materials]
glass = 2.25
glass = 3
[stack]
incident = vacuum
plate = 0.1 glas
thickness = 3
repeat = 2
  gap = 0.1
exit = halfspace vacuum
[numerics]
lmax = 0
colour = red
";
        let e = lines_of(parse_config(text).unwrap_err());
        let lines: Vec<usize> = e.iter().map(|(l, _)| *l).collect();
        assert_eq!(lines, vec![3, 6, 7, 8, 12, 13], "{e:?}");
        assert!(e[1].1.contains("unknown material `glas`"));
        assert!(e[2].1.contains("unknown key `thickness`"));
        assert!(e[3].1.contains("without `end`"));
        assert!(parse_config("[optics]\n").is_err());
        assert!(parse_config("[stack]\njunk\n").is_err());
    }

    #[test]
    fn physical_errors_are_located() {
        let text = "\
[lattice]
kind = square
constant = 1
sphere = vacuum
radius = 0.6
[stack]
plane = 0 0 0.5 0.5
exit = halfspace vacuum
";
        let e = lines_of(parse_config(text).unwrap_err());
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].0, 5, "{e:?}");
    }

    #[test]
    fn ordinary_units_scale_by_two_pi() {
        let text = preset_text("paper-fig3")
            .unwrap()
            .replace("units = angular", "units = ordinary");
        let s = parse_config(&text).unwrap();
        let a = preset("paper-fig3").unwrap();
        for (x, y) in s.omega_grid().iter().zip(a.omega_grid()) {
            assert!((x - 2.0 * PI * y).abs() < 1e-12);
        }
        assert_eq!(Units::Ordinary.from_angular(2.0 * PI), 1.0);
    }

    #[test]
    fn with_periods_changes_top_level_repeat() {
        let s = preset("paper-fig2").unwrap().with_periods(2);
        assert_eq!(s.unit_slice().unwrap().1, 2);
        let d = s.description().unwrap();
        assert!(matches!(d.elements[2], Element::Repeat(_, 2)));
    }
}
