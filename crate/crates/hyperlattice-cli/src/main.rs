//! Command-line front end for the hyperlattice toolkit.
//!
//! Exit codes: 0 success, 1 identity-check failure, 2 domain error,
//! 3 numeric error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use hyperlattice::density::{
    density_verdict, periodization_check, DensityVerdict, PeriodizationReport,
};
use hyperlattice::frame_core::{self, finite_weyl_heisenberg};
use hyperlattice::fuchsian::{self, enumerate_ball, modular_group, FuchsianGroup};
use hyperlattice::halfplane::{HaarQuadratureSpec, HyperbolicGrid, PointH};
use hyperlattice::hardy::{
    admissibility_constant, norm_sq, FreqFunction, FreqQuadratureSpec, Wavelet,
};
use hyperlattice::wavelet::{
    intertwine_residual, ortho_relation_check, range_residual, rep_apply, span_function,
    stationarity_report, stationarity_report_for, wavelet_transform, wspace_inner, MatchedSpan,
    WPlaneGrid,
};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
enum CliError {
    Domain(String),
    Numeric(String),
}

impl From<hyperlattice::Error> for CliError {
    fn from(e: hyperlattice::Error) -> Self {
        if e.is_domain() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io error: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "hyperlattice", version, about = "Lattice orbit systems of hyperbolic wavelets: admissibility, density verdicts, identity checks, tilings")]
struct Cli {
    /// Config file with `key = value` lines; flags take precedence.
    /// Falls back to the HYPERLATTICE_CONFIG environment variable.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled inputs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
struct NodeArgs {
    /// Scale-axis node count for Haar/transform-domain quadrature.
    #[arg(long = "nodes-a")]
    nodes_a: Option<usize>,
    /// Shift-axis node count.
    #[arg(long = "nodes-b")]
    nodes_b: Option<usize>,
    /// Rotation-axis node count.
    #[arg(long = "nodes-theta")]
    nodes_theta: Option<usize>,
    /// Frequency-axis nodes per panel.
    #[arg(long = "nodes-freq")]
    nodes_freq: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Admissibility constant, squared norm, their ratio against 2/alpha,
    /// and the formal dimension.
    Admissibility {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[command(flatten)]
        nodes: NodeArgs,
    },
    /// Density verdict for a lattice against the window family.
    Verdict {
        /// `modular` or `hecke:q`.
        #[arg(long)]
        group: Option<String>,
        /// Hecke parameter; shorthand for `--group hecke:q`.
        #[arg(long)]
        q: Option<u32>,
        /// Explicit covolume, bypassing the group quadrature.
        #[arg(long)]
        covolume: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
    },
    /// Residual table for the structural identities; exit 1 on any failure.
    IdentitySuite {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        /// Multiply every tolerance by this factor.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        /// Replace the matched window by a generic one (negative control).
        #[arg(long, default_value_t = false)]
        corrupt_window: bool,
        #[command(flatten)]
        nodes: NodeArgs,
    },
    /// Reduce points to the fundamental domain; optional SVG of the tiling.
    Tile {
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        q: Option<u32>,
        /// Points as `x,y;x,y;...`; sampled when omitted.
        #[arg(long)]
        points: Option<String>,
        /// Number of sampled points when --points is omitted.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        word_length: Option<usize>,
        /// Write an SVG of the fundamental domain and its word-ball images.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Finite Weyl-Heisenberg density analog on C^N with a subgroup of order K.
    FiniteDemo {
        #[arg(long)]
        n_dim: Option<usize>,
        /// Subgroup order; must select a subgroup of Z_N x Z_N.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Hyperbolic covolume of a lattice fundamental domain.
    Covolume {
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        cusp_height: Option<f64>,
        #[command(flatten)]
        nodes: NodeArgs,
    },
    /// Periodization identity over lattice tiles.
    Periodization {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long)]
        word_length: Option<usize>,
        #[arg(long)]
        cusp_height: Option<f64>,
        #[command(flatten)]
        nodes: NodeArgs,
    },
}

/// Flat `key = value` config with `#` comments.
fn load_config(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Domain(format!(
                "config line {} is not `key = value`: {raw:?}",
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

struct Settings {
    config: HashMap<String, String>,
}

impl Settings {
    fn get<T: std::str::FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.config.get(key) {
            Some(raw) => raw.parse().map_err(|_| {
                CliError::Domain(format!("config key {key} has unparseable value {raw:?}"))
            }),
            None => Ok(default),
        }
    }

    fn get_opt<T: std::str::FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| CliError::Domain(format!("config key {key} has unparseable value {raw:?}"))),
            None => Ok(None),
        }
    }
}

fn resolve_group(name: &str, q: Option<u32>) -> Result<FuchsianGroup, CliError> {
    match name {
        "modular" => Ok(modular_group()),
        "hecke" => {
            let q = q.ok_or_else(|| CliError::Domain("hecke group needs --q".into()))?;
            Ok(fuchsian::hecke_group(q)?)
        }
        other => {
            if let Some(qs) = other.strip_prefix("hecke:") {
                let q: u32 = qs
                    .parse()
                    .map_err(|_| CliError::Domain(format!("bad hecke parameter {qs:?}")))?;
                Ok(fuchsian::hecke_group(q)?)
            } else {
                Err(CliError::Domain(format!(
                    "unknown group {other:?}; expected `modular` or `hecke:q`"
                )))
            }
        }
    }
}

/// Canonical JSON: sorted keys (serde_json's default map), compact, one
/// trailing newline. Identical inputs give identical bytes.
fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", serde_json::to_string(value).expect("serializable")),
        Format::Text => {
            let mut out = String::new();
            render_text(value, "", &mut out);
            out
        }
    }
}

fn render_text(value: &Value, prefix: &str, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                render_text(v, &path, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                render_text(v, &format!("{prefix}[{i}]"), out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}

fn emit<T: Serialize>(report: &T, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let mut value = serde_json::to_value(report)
        .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
    if let Value::Object(map) = &mut value {
        map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    }
    let text = render(&value, format);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct AdmissibilityReport {
    alpha: f64,
    n: u32,
    admissibility_constant: f64,
    norm_sq: f64,
    ratio: f64,
    expected_ratio: f64,
    ratio_residual: f64,
    formal_dimension: f64,
}

fn cmd_admissibility(
    alpha: f64,
    n: u32,
    nodes_freq: Option<usize>,
) -> Result<AdmissibilityReport, CliError> {
    let psi = Wavelet::new(n, alpha)?;
    let f = FreqFunction::from_wavelet(psi);
    let mut spec = FreqQuadratureSpec::for_wavelet(&psi);
    if let Some(k) = nodes_freq {
        spec = FreqQuadratureSpec::new(spec.cutoff, k, spec.graded_levels)?;
    }
    let c = admissibility_constant(&f, &spec)?;
    let ns = norm_sq(&f, &spec)?;
    if ns <= 0.0 || !ns.is_finite() || !c.is_finite() {
        return Err(CliError::Numeric(format!(
            "window norm or admissibility constant not usable: C = {c}, norm^2 = {ns}"
        )));
    }
    let ratio = c / ns;
    let expected = 2.0 / alpha;
    Ok(AdmissibilityReport {
        alpha,
        n,
        admissibility_constant: c,
        norm_sq: ns,
        ratio,
        expected_ratio: expected,
        ratio_residual: (ratio - expected).abs(),
        formal_dimension: psi.formal_dimension_closed_form(),
    })
}

#[derive(Serialize)]
struct VerdictReport {
    group: String,
    #[serde(flatten)]
    verdict: DensityVerdict,
}

fn computed_covolume(group: &FuchsianGroup) -> Result<f64, CliError> {
    let domain = group.domain(10.0);
    Ok(fuchsian::covolume(&domain, &HyperbolicGrid::default())?)
}

fn cmd_verdict(
    group_name: &str,
    q: Option<u32>,
    covolume: Option<f64>,
    alpha: f64,
    n: u32,
) -> Result<VerdictReport, CliError> {
    let (label, omega) = match covolume {
        Some(v) => ("explicit".to_string(), v),
        None => {
            let group = resolve_group(group_name, q)?;
            let omega = computed_covolume(&group)?;
            (group.name.clone(), omega)
        }
    };
    Ok(VerdictReport {
        group: label,
        verdict: density_verdict(omega, alpha, n)?,
    })
}

#[derive(Serialize)]
struct IdentityRow {
    check: String,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct IdentitySuiteReport {
    alpha: f64,
    n: u32,
    corrupt_window: bool,
    tol_scale: f64,
    rows: Vec<IdentityRow>,
    all_pass: bool,
}

fn sample_points() -> Vec<PointH> {
    let mut pts = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            pts.push(PointH {
                x: -2.5 + 5.0 * i as f64 / 9.0,
                y: 0.2 + 2.8 * j as f64 / 9.0,
            });
        }
    }
    pts
}

fn cmd_identity_suite(
    alpha: f64,
    n: u32,
    tol_scale: f64,
    corrupt_window: bool,
    _nodes: &NodeArgs,
) -> Result<IdentitySuiteReport, CliError> {
    if tol_scale < 0.0 {
        return Err(CliError::Domain("tolerance scale must be nonnegative".into()));
    }
    let psi = Wavelet::new(n, alpha)?;
    let f = FreqFunction::from_wavelet(psi);
    let samples = sample_points();
    let mut rows = Vec::new();
    let mut push = |check: &str, residual: f64, tol: f64| {
        rows.push(IdentityRow {
            check: check.into(),
            residual,
            tolerance: tol * tol_scale,
            pass: residual < tol * tol_scale,
        });
    };

    let span = span_function(
        &psi,
        &[
            (Complex64::new(1.0, 0.0), 1.0, 0.0),
            (Complex64::new(0.5, 0.3), 1.7, -0.4),
        ],
    )?;
    push(
        "intertwining",
        intertwine_residual(&span, &psi, 2.0, -1.0, &samples)?,
        1e-8,
    );

    let stat = if corrupt_window {
        let generic = span_function(
            &psi,
            &[
                (Complex64::new(1.0, 0.0), 1.0, 0.0),
                (Complex64::new(0.8, 0.0), 0.5, 0.6),
            ],
        )?;
        let wt = wavelet_transform(&generic, &psi);
        stationarity_report_for(&wt, n, alpha, 0.4, &samples)?
    } else {
        stationarity_report(&psi, 0.4, &samples)?
    };
    push("stationarity_modulus", stat.modulus_residual, 1e-6);
    push("stationarity_dispersion", stat.dispersion, 1e-6);

    let spec = FreqQuadratureSpec::for_wavelet(&psi);
    let c_psi = admissibility_constant(&f, &spec)?;
    let ns = norm_sq(&f, &spec)?;
    let wt = wavelet_transform(&f, &psi);
    let grid = WPlaneGrid::standard();
    let calderon = wspace_inner(&wt, &wt, &grid);
    let calderon_target = c_psi * ns;
    push(
        "calderon",
        (calderon.re - calderon_target).abs() / calderon_target,
        1e-3,
    );

    let window = MatchedSpan::window(psi);
    let haar = HaarQuadratureSpec::new(0.02, 50.0, 64, 12.0, 72, 4)?;
    let ortho = ortho_relation_check(&window, &window, &window, &window, &haar, None)?;
    push("orthogonality", ortho.relerr, 1e-2);

    let range_grid = WPlaneGrid::new(0.05, 12.0, 30, 6.0, 36)?;
    let rotated = rep_apply(
        &hyperlattice::halfplane::rotation(0.5),
        n,
        alpha,
        &wt,
    );
    push("range", range_residual(&rotated, &psi, &range_grid)?, 1e-2);

    let group = modular_group();
    let phaar = HaarQuadratureSpec::new(0.02, 50.0, 40, 10.0, 48, 2)?;
    let dgrid = HyperbolicGrid {
        x_panels: 2,
        x_nodes: 10,
        y_nodes: 14,
    };
    let rpt = periodization_check(
        &window,
        &window,
        &group,
        6,
        &phaar,
        &group.domain(8.0),
        &dgrid,
    )?;
    push("periodization", rpt.relerr, 2e-1);

    let all_pass = rows.iter().all(|r| r.pass);
    Ok(IdentitySuiteReport {
        alpha,
        n,
        corrupt_window,
        tol_scale,
        rows,
        all_pass,
    })
}

#[derive(Serialize)]
struct TilePoint {
    input: [f64; 2],
    reduced: [f64; 2],
    gamma: [f64; 4],
    boundary_ambiguous: bool,
}

#[derive(Serialize)]
struct TileReport {
    group: String,
    count: usize,
    points: Vec<TilePoint>,
    svg_path: Option<String>,
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
}

fn parse_points(text: &str) -> Result<Vec<PointH>, CliError> {
    let mut pts = Vec::new();
    for chunk in text.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let Some((xs, ys)) = chunk.split_once(',') else {
            return Err(CliError::Domain(format!("bad point {chunk:?}; expected x,y")));
        };
        let x: f64 = xs
            .trim()
            .parse()
            .map_err(|_| CliError::Domain(format!("bad x coordinate {xs:?}")))?;
        let y: f64 = ys
            .trim()
            .parse()
            .map_err(|_| CliError::Domain(format!("bad y coordinate {ys:?}")))?;
        pts.push(PointH::new(x, y)?);
    }
    if pts.is_empty() {
        return Err(CliError::Domain("no points given".into()));
    }
    Ok(pts)
}

fn svg_tiling(group: &FuchsianGroup, word_length: usize) -> String {
    const W: f64 = 800.0;
    const H: f64 = 600.0;
    let to_svg = |p: PointH| ((p.x + 2.0) / 4.0 * W, (3.0 - p.y) / 3.0 * H);
    let domain = group.domain(3.0);
    let w = domain.half_width;
    // boundary of the truncated fundamental domain, counterclockwise
    let mut boundary = Vec::new();
    let y_side = (1.0 - w * w).max(0.0).sqrt();
    for k in 0..=40 {
        let t = k as f64 / 40.0;
        boundary.push(PointH {
            x: w,
            y: y_side + t * (3.0 - y_side),
        });
    }
    let phi0 = y_side.atan2(w);
    for k in 1..=40 {
        let t = k as f64 / 40.0;
        let phi = phi0 + t * (std::f64::consts::PI - 2.0 * phi0);
        boundary.push(PointH {
            x: phi.cos(),
            y: phi.sin().max(1e-3),
        });
    }
    for k in 1..=40 {
        let t = k as f64 / 40.0;
        boundary.push(PointH {
            x: -w,
            y: y_side + t * (3.0 - y_side),
        });
    }
    let ball = enumerate_ball(group, word_length);
    let mut paths = String::new();
    for (i, gamma) in ball.elements.iter().enumerate() {
        let mut d = String::new();
        for (k, &p) in boundary.iter().enumerate() {
            let (sx, sy) = to_svg(gamma.apply(p));
            if !sx.is_finite() || !sy.is_finite() {
                continue;
            }
            d.push_str(if k == 0 || d.is_empty() { "M" } else { "L" });
            d.push_str(&format!("{sx:.2},{sy:.2} "));
        }
        let fill = if i == 0 { "#cfe8ff" } else { "none" };
        paths.push_str(&format!(
            "  <path d=\"{}Z\" fill=\"{fill}\" stroke=\"#335\" stroke-width=\"0.7\"/>\n",
            d.trim_end()
        ));
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n{paths}</svg>\n"
    )
}

fn cmd_tile(
    group_name: &str,
    q: Option<u32>,
    points: Option<String>,
    count: usize,
    word_length: usize,
    seed: u64,
    svg: Option<&Path>,
) -> Result<TileReport, CliError> {
    let group = resolve_group(group_name, q)?;
    let pts = match points {
        Some(text) => parse_points(&text)?,
        None => {
            let mut state = seed;
            (0..count)
                .map(|_| PointH {
                    x: -2.0 + 4.0 * splitmix(&mut state),
                    y: 0.05 + 2.95 * splitmix(&mut state),
                })
                .collect()
        }
    };
    let domain = group.domain(f64::INFINITY);
    let mut out_points = Vec::new();
    for &z in &pts {
        let (gamma, reduced) = fuchsian::reduce_to_domain(z, &group)?;
        let tol = 1e-9;
        let on_wall = (reduced.x.abs() - domain.half_width).abs() < tol;
        let on_arc = ((reduced.x * reduced.x + reduced.y * reduced.y).sqrt() - 1.0).abs() < tol;
        out_points.push(TilePoint {
            input: [z.x, z.y],
            reduced: [reduced.x, reduced.y],
            gamma: [gamma.a, gamma.b, gamma.c, gamma.d],
            boundary_ambiguous: on_wall || on_arc,
        });
    }
    let svg_path = match svg {
        Some(path) => {
            std::fs::write(path, svg_tiling(&group, word_length))?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok(TileReport {
        group: group.name.clone(),
        count: out_points.len(),
        points: out_points,
        svg_path,
    })
}

#[derive(Serialize)]
struct FiniteDemoReport {
    dim: usize,
    subgroup_order: usize,
    frame_lower: f64,
    frame_upper: f64,
    riesz_lower: f64,
    riesz_upper: f64,
    is_frame: bool,
    is_riesz: bool,
}

fn cmd_finite_demo(n_dim: usize, k: usize, seed: u64) -> Result<FiniteDemoReport, CliError> {
    let rep = finite_weyl_heisenberg(n_dim)?;
    // product subgroups of Z_N x Z_N: order k = k1 * k2 with k1, k2 | N;
    // k1 translations times k2 modulations
    let order = n_dim * n_dim;
    if k == 0 || order % k != 0 {
        return Err(CliError::Domain(format!(
            "subgroup order {k} does not divide group order {order}"
        )));
    }
    let k1 = (1..=k.min(n_dim))
        .rev()
        .find(|&c| k % c == 0 && n_dim % c == 0 && n_dim % (k / c) == 0 && k / c <= n_dim)
        .ok_or_else(|| {
            CliError::Domain(format!(
                "no product subgroup of order {k} in Z_{n_dim} x Z_{n_dim}"
            ))
        })?;
    let k2 = k / k1;
    let (pstep, qstep) = (n_dim / k1, n_dim / k2);
    let mut selection = Vec::with_capacity(k);
    for i in 0..k1 {
        for j in 0..k2 {
            selection.push(i * pstep * n_dim + j * qstep);
        }
    }
    let mut state = seed.wrapping_add(1);
    let window: Vec<Complex64> = (0..n_dim)
        .map(|_| Complex64::new(splitmix(&mut state) - 0.5, splitmix(&mut state) - 0.5))
        .collect();
    let rpt = frame_core::density_analog_experiment(&rep, &selection, &window)?;
    Ok(FiniteDemoReport {
        dim: rpt.dim,
        subgroup_order: rpt.subgroup_order,
        frame_lower: rpt.frame_bounds.lower,
        frame_upper: rpt.frame_bounds.upper,
        riesz_lower: rpt.riesz_bounds.lower,
        riesz_upper: rpt.riesz_bounds.upper,
        is_frame: rpt.is_frame,
        is_riesz: rpt.is_riesz,
    })
}

#[derive(Serialize)]
struct CovolumeReport {
    group: String,
    cusp_height: f64,
    covolume: f64,
}

fn cmd_covolume(
    group_name: &str,
    q: Option<u32>,
    cusp_height: f64,
    nodes: &NodeArgs,
) -> Result<CovolumeReport, CliError> {
    let group = resolve_group(group_name, q)?;
    let domain = group.domain(cusp_height);
    let mut grid = HyperbolicGrid::default();
    if let Some(k) = nodes.nodes_a {
        grid.y_nodes = k;
    }
    if let Some(k) = nodes.nodes_b {
        grid.x_nodes = k;
    }
    let covolume = fuchsian::covolume(&domain, &grid)?;
    Ok(CovolumeReport {
        group: group.name.clone(),
        cusp_height,
        covolume,
    })
}

#[derive(Serialize)]
struct PeriodizationCliReport {
    group: String,
    alpha: f64,
    n: u32,
    #[serde(flatten)]
    report: PeriodizationReport,
}

fn cmd_periodization(
    alpha: f64,
    n: u32,
    group_name: &str,
    q: Option<u32>,
    word_length: usize,
    cusp_height: f64,
    nodes: &NodeArgs,
) -> Result<PeriodizationCliReport, CliError> {
    let group = resolve_group(group_name, q)?;
    let psi = Wavelet::new(n, alpha)?;
    let window = MatchedSpan::window(psi);
    let haar = HaarQuadratureSpec::new(
        0.02,
        50.0,
        nodes.nodes_a.unwrap_or(40),
        10.0,
        nodes.nodes_b.unwrap_or(48),
        nodes.nodes_theta.unwrap_or(2),
    )?;
    let dgrid = HyperbolicGrid {
        x_panels: 2,
        x_nodes: 10,
        y_nodes: 14,
    };
    let report = periodization_check(
        &window,
        &window,
        &group,
        word_length,
        &haar,
        &group.domain(cusp_height),
        &dgrid,
    )?;
    Ok(PeriodizationCliReport {
        group: group.name.clone(),
        alpha,
        n,
        report,
    })
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("HYPERLATTICE_CONFIG").map(PathBuf::from));
    let config = match &config_path {
        Some(path) => load_config(path)?,
        None => HashMap::new(),
    };
    let settings = Settings { config };
    let format = match settings.get(
        "format",
        cli.format.map(|f| match f {
            Format::Text => "text".to_string(),
            Format::Json => "json".to_string(),
        }),
        "text".to_string(),
    )? {
        s if s == "json" => Format::Json,
        s if s == "text" => Format::Text,
        s => return Err(CliError::Domain(format!("unknown format {s:?}"))),
    };
    let out = match settings.get_opt(
        "out",
        cli.out.clone().map(|p| p.display().to_string()),
    )? {
        Some(p) => Some(PathBuf::from(p)),
        None => None,
    };
    let seed = settings.get("seed", cli.seed, 1u64)?;

    let mut suite_failed = false;
    match &cli.cmd {
        Cmd::Admissibility { alpha, n, nodes } => {
            let alpha = settings.get("alpha", *alpha, 2.0)?;
            let n = settings.get("n", *n, 0u32)?;
            let nf = settings.get_opt("nodes-freq", nodes.nodes_freq)?;
            emit(&cmd_admissibility(alpha, n, nf)?, format, out.as_deref())?;
        }
        Cmd::Verdict {
            group,
            q,
            covolume,
            alpha,
            n,
        } => {
            let group = settings.get("group", group.clone(), "modular".to_string())?;
            let q = settings.get_opt("q", *q)?;
            let alpha = settings.get("alpha", *alpha, 2.0)?;
            let n = settings.get("n", *n, 0u32)?;
            let report = cmd_verdict(&group, q, *covolume, alpha, n)?;
            emit(&report, format, out.as_deref())?;
        }
        Cmd::IdentitySuite {
            alpha,
            n,
            tol_scale,
            corrupt_window,
            nodes,
        } => {
            let alpha = settings.get("alpha", *alpha, 2.0)?;
            let n = settings.get("n", *n, 0u32)?;
            let report = cmd_identity_suite(alpha, n, *tol_scale, *corrupt_window, nodes)?;
            suite_failed = !report.all_pass;
            emit(&report, format, out.as_deref())?;
        }
        Cmd::Tile {
            group,
            q,
            points,
            count,
            word_length,
            svg,
        } => {
            let group = settings.get("group", group.clone(), "modular".to_string())?;
            let q = settings.get_opt("q", *q)?;
            let count = settings.get("count", *count, 50usize)?;
            let word_length = settings.get("word-length", *word_length, 3usize)?;
            let report = cmd_tile(
                &group,
                q,
                points.clone(),
                count,
                word_length,
                seed,
                svg.as_deref(),
            )?;
            emit(&report, format, out.as_deref())?;
        }
        Cmd::FiniteDemo { n_dim, k } => {
            let n_dim = settings.get("n-dim", *n_dim, 4usize)?;
            let k = settings.get("k", *k, n_dim * n_dim)?;
            emit(&cmd_finite_demo(n_dim, k, seed)?, format, out.as_deref())?;
        }
        Cmd::Covolume {
            group,
            q,
            cusp_height,
            nodes,
        } => {
            let group = settings.get("group", group.clone(), "modular".to_string())?;
            let q = settings.get_opt("q", *q)?;
            let cusp_height = settings.get("cusp-height", *cusp_height, 10.0)?;
            emit(
                &cmd_covolume(&group, q, cusp_height, nodes)?,
                format,
                out.as_deref(),
            )?;
        }
        Cmd::Periodization {
            alpha,
            n,
            group,
            q,
            word_length,
            cusp_height,
            nodes,
        } => {
            let alpha = settings.get("alpha", *alpha, 2.0)?;
            let n = settings.get("n", *n, 0u32)?;
            let group = settings.get("group", group.clone(), "modular".to_string())?;
            let q = settings.get_opt("q", *q)?;
            let word_length = settings.get("word-length", *word_length, 6usize)?;
            let cusp_height = settings.get("cusp-height", *cusp_height, 8.0)?;
            emit(
                &cmd_periodization(alpha, n, &group, q, word_length, cusp_height, nodes)?,
                format,
                out.as_deref(),
            )?;
        }
    }
    Ok(suite_failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::from(0),
        Ok(true) => ExitCode::from(1),
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
