//! Command-line definitions and per-command drivers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fscinfo::compliance::{
    check_band_limit, check_corner_emptiness, check_real_space_apodization, check_sampling_claim, defaults,
    filling_degree, ComplianceReport, TWO_THIRDS,
};
use fscinfo::info::{fisher_information, weighted_information_by_counts, DEFAULT_BAND, DEFAULT_CLAMP_EPS};
use fscinfo::locality::{CellState, DEFAULT_MASK_SIGMA_FRAC, UNEVALUATED_FILL};
use fscinfo::metrics::fixed_threshold;
use fscinfo::modelx::{run_experiment, ExperimentConfig, Verdict, DEFAULT_BAND_RATIO};
use fscinfo::packet::{estimate_bandwidth, CccMode};
use fscinfo::prep::{amplitude_match, fourier_resample, magnification_scale, translational_align};
use fscinfo::transducer::{
    accumulate_fri, envelope, relative_tie_with_floor, tie_with_floor, DEFAULT_ENVELOPE_WINDOW, DEFAULT_INFO_FLOOR,
};
use fscinfo::{
    forward_transform, fsc, half_bit_threshold, integrated_information, inverse_transform, lcid_map, lid_map,
    pic_fourier, pic_real, radial_bins, resolution_crossing, weighted_information, Curve64, CurveKind, InfoMap64,
    InfoParams, RadialBins64, ThresholdParams, Volume64, WindowSpec,
};

use crate::config::{pick, Config};
use crate::curves::{read_curves, write_curves, CurveFile, Format};
use crate::emdb::{fetch_emdb, EmdbOptions};
use crate::error::{CliError, Result};
use crate::inputs::{load_packet, load_series, load_volume};
use crate::mrc::{write_info_map, write_mrc};
use crate::plot::{write_svg, Marker, Panel};

const DEFAULT_WINDOW: usize = 16;
const DEFAULT_STRIDE: usize = 4;
const DEFAULT_FILL_LEVEL: f64 = 0.1;
const DEFAULT_BANDWIDTH_POWER: f64 = 0.99;

#[derive(Debug, Parser)]
#[command(name = "fscinfo", version, about = "Correlation-based information metrics for maps and images")]
pub struct Cli {
    /// TOML file with parameter defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fourier shell/ring correlation with the half-bit threshold.
    Fsc(FscArgs),
    /// Per-shell information (unweighted and radially weighted).
    Fsi(FsiArgs),
    /// Band-integrated global information content.
    Gic(GicArgs),
    /// Local information density map from two half-maps.
    Lid(LidArgs),
    /// Local cross-information density between two independent maps.
    Lcid(LcidArgs),
    /// Transducer information efficiency from measurement-series manifests.
    Tie(TieArgs),
    /// Packet information content of two 1D packets.
    Pic(PicArgs),
    /// Signal-plus-noise decomposition on a synthetic phantom.
    ModelExperiment(ModelArgs),
    /// Sampling and apodization compliance checks.
    Check(CheckArgs),
    /// Fourier resampling to a new voxel size.
    Resample(ResampleArgs),
    /// Download (or reuse a cached copy of) an EMDB primary map.
    FetchEmdb(FetchArgs),
    /// Plot a curves file as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// First half-map (MRC).
    pub a: PathBuf,
    /// Second half-map (MRC).
    pub b: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct InfoOpts {
    /// Real-space filling degree κ; overrides --d-over-l.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Linear filling D/L (κ = (D/L)^d); also scales the threshold cell count.
    #[arg(long)]
    pub d_over_l: Option<f64>,
    /// Constant weight K replacing κ·r^(d-1).
    #[arg(long)]
    pub k: Option<f64>,
    /// Correlation clamp ε.
    #[arg(long)]
    pub clamp_eps: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct BandOpts {
    /// Lower band edge as a fraction of Nyquist.
    #[arg(long)]
    pub band_lo: Option<f64>,
    /// Upper band edge (exclusive) as a fraction of Nyquist.
    #[arg(long)]
    pub band_hi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FscArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Point-group multiplicity.
    #[arg(long)]
    pub symmetry: Option<u32>,
    /// Linear filling D/L used in the effective cell count.
    #[arg(long)]
    pub d_over_l: Option<f64>,
    /// Exponent applied to D/L in the effective cell count.
    #[arg(long)]
    pub n_eff_exponent: Option<f64>,
    /// Also draw a fixed threshold (reported, not used for the resolution).
    #[arg(long)]
    pub fixed: Option<f64>,
    /// Curves output (.csv or .json).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// SVG plot output.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FsiArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub info: InfoOpts,
    #[command(flatten)]
    pub band: BandOpts,
    /// Weight shells by their actual cell counts instead of κ·r^(d-1).
    #[arg(long)]
    pub by_counts: bool,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GicArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub info: InfoOpts,
    #[command(flatten)]
    pub band: BandOpts,
    #[arg(long)]
    pub by_counts: bool,
}

#[derive(Debug, Args, Default)]
pub struct WindowOpts {
    /// Window edge in samples (even).
    #[arg(long)]
    pub window: Option<usize>,
    /// Distance between window origins in samples.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Gaussian mask σ as a fraction of the half window.
    #[arg(long)]
    pub mask_sigma: Option<f64>,
    /// Value written to cells no window evaluated.
    #[arg(long, default_value_t = UNEVALUATED_FILL)]
    pub fill: f64,
}

#[derive(Debug, Args)]
pub struct LidArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[command(flatten)]
    pub window: WindowOpts,
    #[command(flatten)]
    pub band: BandOpts,
    #[arg(long)]
    pub clamp_eps: Option<f64>,
    /// Output map (MRC).
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LcidArgs {
    /// First map (MRC).
    pub m1: PathBuf,
    /// Second map (MRC); preparation steps are applied to this one.
    pub m2: PathBuf,
    #[command(flatten)]
    pub window: WindowOpts,
    #[command(flatten)]
    pub band: BandOpts,
    #[arg(long)]
    pub clamp_eps: Option<f64>,
    /// Resample both maps to this voxel size first.
    #[arg(long)]
    pub resample_to: Option<f64>,
    /// Magnification correction applied to the second map.
    #[arg(long)]
    pub magnification: Option<f64>,
    /// Translationally align the second map onto the first.
    #[arg(long)]
    pub align: bool,
    /// Match the second map's shell amplitudes to the first.
    #[arg(long)]
    pub amplitude_match: bool,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TieArgs {
    /// Manifest of output image pairs.
    pub output: PathBuf,
    /// Manifest of input pairs (or a second output series with --relative).
    pub reference: PathBuf,
    /// Compare two output series instead of output against input.
    #[arg(long)]
    pub relative: bool,
    /// Replace both accumulated curves by their upper envelopes first.
    #[arg(long)]
    pub envelope: bool,
    /// Envelope window in shells.
    #[arg(long)]
    pub envelope_window: Option<usize>,
    /// Information floor below which the ratio is undefined.
    #[arg(long)]
    pub floor: Option<f64>,
    #[command(flatten)]
    pub info: InfoOpts,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Literal,
    Centered,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Real,
    Fourier,
}

#[derive(Debug, Args)]
pub struct PicArgs {
    /// First packet (text or raw little-endian f32).
    pub p1: PathBuf,
    /// Second packet.
    pub p2: PathBuf,
    /// Sample step.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Literal)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SpaceArg::Real)]
    pub space: SpaceArg,
    /// Bandwidth B for the real-space route (default: estimated from the first packet).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Packet length L for the Fourier route (default: packet extent).
    #[arg(long)]
    pub length: Option<f64>,
    /// Packets per second; reports the channel throughput.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Cube edge in samples.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds to run.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub noise_to_signal: Option<f64>,
    #[arg(long)]
    pub blob_count: Option<usize>,
    #[arg(long)]
    pub band_ratio: Option<f64>,
    /// Five-curve output of the first seed (.csv or .json).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Four-panel SVG of the first seed.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Map (MRC).
    pub map: PathBuf,
    /// Claimed resolution, in the map's length unit.
    #[arg(long)]
    pub claimed_resolution: Option<f64>,
    /// Exit with status 3 when any check fails.
    #[arg(long)]
    pub strict: bool,
    /// JSON reports output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    pub input: PathBuf,
    /// Target voxel size.
    #[arg(long)]
    pub step: f64,
    /// Magnification correction applied after resampling.
    #[arg(long)]
    pub magnification: Option<f64>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Entry id, e.g. 21452 or EMD-21452.
    pub id: String,
    /// Cache directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Curves file (.csv or .json).
    pub curves: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Label of the threshold curve (default: the first threshold curve).
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub title: Option<String>,
}

/// Runs one parsed invocation, writing the report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let mut w = Report::default();
    let r = match cli.command {
        Command::Fsc(a) => cmd_fsc(&a, &cfg, &mut w),
        Command::Fsi(a) => cmd_fsi(&a, &cfg, &mut w),
        Command::Gic(a) => cmd_gic(&a, &cfg, &mut w),
        Command::Lid(a) => cmd_lid(&a, &cfg, &mut w),
        Command::Lcid(a) => cmd_lcid(&a, &cfg, &mut w),
        Command::Tie(a) => cmd_tie(&a, &cfg, &mut w),
        Command::Pic(a) => cmd_pic(&a, &mut w),
        Command::ModelExperiment(a) => cmd_model(&a, &cfg, &mut w),
        Command::Check(a) => cmd_check(&a, &cfg, &mut w),
        Command::Resample(a) => cmd_resample(&a, &mut w),
        Command::FetchEmdb(a) => cmd_fetch(&a, &mut w),
        Command::Plot(a) => cmd_plot(&a, &mut w),
    };
    out.write_all(w.0.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    r
}

#[derive(Default)]
struct Report(String);

impl Report {
    fn line(&mut self, s: impl AsRef<str>) {
        self.0.push_str(s.as_ref());
        self.0.push('\n');
    }

    fn params(&mut self, command: &str, kv: &[(&str, String)]) {
        let mut s = format!("params: command={command}");
        for (k, v) in kv {
            let _ = write!(s, " {k}={v}");
        }
        self.line(s);
    }
}

fn dims_str(d: &[usize]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

fn load_pair(p: &PairArgs) -> Result<(Volume64, Volume64)> {
    let a = load_volume(&p.a)?;
    let b = load_volume(&p.b)?;
    if a.dims() != b.dims() {
        return Err(CliError::Data(format!(
            "dimension mismatch: {} vs {}",
            dims_str(a.dims()),
            dims_str(b.dims())
        )));
    }
    let (sa, sb) = (a.step(), b.step());
    if ((sa - sb) / sa).abs() > fscinfo::locality::STEP_TOLERANCE {
        return Err(CliError::Data(format!("sampling mismatch: {sa} vs {sb}")));
    }
    if a.ndim() < 2 {
        return Err(CliError::Data("half-maps must be 2D or 3D".into()));
    }
    let b = b.with_step(sa)?;
    Ok((a, b))
}

fn pair_fsc(a: &Volume64, b: &Volume64) -> Result<(RadialBins64, Curve64)> {
    let bins = radial_bins(a.dims(), a.step())?;
    let c = fsc(&forward_transform(a)?, &forward_transform(b)?, &bins)?;
    Ok((bins, c))
}

fn info_params(o: &InfoOpts, cfg: &Config, ndim: usize) -> Result<InfoParams> {
    let p = match o.kappa.or(cfg.kappa) {
        Some(k) => InfoParams::from_kappa(ndim, k)?,
        None => InfoParams::from_fill(ndim, pick(o.d_over_l, cfg.d_over_l, 1.0))?,
    };
    Ok(p.with_clamp_eps(pick(o.clamp_eps, cfg.clamp_eps, DEFAULT_CLAMP_EPS))?
        .with_k_override(o.k))
}

fn band(o: &BandOpts, cfg: &Config) -> (f64, f64) {
    (
        pick(o.band_lo, cfg.band_lo, DEFAULT_BAND.0),
        pick(o.band_hi, cfg.band_hi, DEFAULT_BAND.1),
    )
}

fn info_kv(p: &InfoParams) -> Vec<(&'static str, String)> {
    vec![
        ("dimensionality", p.dimensionality.to_string()),
        ("kappa", format!("{:?}", p.kappa)),
        ("d_over_l", format!("{:?}", p.d_over_l)),
        ("clamp_eps", format!("{:?}", p.clamp_eps)),
        (
            "k",
            p.k_override.map_or_else(|| "radial".to_string(), |k| format!("{k:?}")),
        ),
    ]
}

fn save_curves(path: &Path, file: &CurveFile, w: &mut Report) -> Result<()> {
    write_curves(file, path, Format::from_path(path))?;
    w.line(format!("wrote {}", path.display()));
    Ok(())
}

fn crossing_marker(c: &Curve64, t: &Curve64) -> Result<Option<Marker>> {
    let r = resolution_crossing(c, t)?;
    if r.no_crossing {
        return Ok(None);
    }
    let (i, j) = r.shell_interval;
    let (f0, f1) = (c.freq[i], c.freq[j]);
    let t_frac = if f1 > f0 { (r.frequency - f0) / (f1 - f0) } else { 0.0 };
    let value = t.values[i] + t_frac * (t.values[j] - t.values[i]);
    Ok(Some(Marker {
        frequency: r.frequency,
        value,
    }))
}

fn cmd_fsc(a: &FscArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let (va, vb) = load_pair(&a.pair)?;
    let base = ThresholdParams::for_dimensionality(va.ndim());
    let tp = ThresholdParams::new(
        pick(a.symmetry, cfg.symmetry_order, base.symmetry_order),
        pick(a.d_over_l, cfg.d_over_l, base.fill_linear),
        pick(a.n_eff_exponent, cfg.n_eff_exponent, base.n_eff_exponent),
    )?;
    w.params(
        "fsc",
        &[
            ("dims", dims_str(va.dims())),
            ("step", format!("{:?}", va.step())),
            ("symmetry", tp.symmetry_order.to_string()),
            ("d_over_l", format!("{:?}", tp.fill_linear)),
            ("n_eff_exponent", format!("{:?}", tp.n_eff_exponent)),
            ("fixed", a.fixed.map_or("none".into(), |f| format!("{f:?}"))),
        ],
    );
    let (bins, c) = pair_fsc(&va, &vb)?;
    let thr = half_bit_threshold(&bins, &tp)?;
    let r = resolution_crossing(&c, &thr)?;
    if r.no_crossing {
        w.line(format!("half-bit: no crossing; resolution limited by Nyquist ({:.4})", r.resolution));
    } else {
        w.line(format!(
            "half-bit: crossing at {:.6} (resolution {:.4}) between shells {} and {}",
            r.frequency, r.resolution, r.shell_interval.0, r.shell_interval.1
        ));
    }
    let mut curves = vec![c.clone(), thr.clone()];
    if let Some(f) = a.fixed {
        let ft = fixed_threshold(&bins, f);
        let rf = resolution_crossing(&c, &ft)?;
        w.line(format!(
            "fixed {f}: crossing at {:.6} (resolution {:.4}){}",
            rf.frequency,
            rf.resolution,
            if rf.no_crossing { ", no crossing" } else { "" }
        ));
        curves.push(ft);
    }
    if let Some(p) = &a.out {
        let f = CurveFile::new(va.dims(), va.step(), curves.clone())?
            .with_param("symmetry", tp.symmetry_order)
            .with_param("d_over_l", tp.fill_linear)
            .with_param("n_eff_exponent", tp.n_eff_exponent);
        save_curves(p, &f, w)?;
    }
    if let Some(p) = &a.svg {
        let mut panel = Panel::new("FSC", vec![&curves[0]]).y_label("correlation").threshold(&curves[1]);
        if let Some(m) = crossing_marker(&c, &thr)? {
            panel = panel.marker(m);
        }
        write_svg(&[panel], 1, p)?;
        w.line(format!("wrote {}", p.display()));
    }
    Ok(())
}

fn info_curves(
    va: &Volume64,
    vb: &Volume64,
    p: &InfoParams,
    by_counts: bool,
) -> Result<(Curve64, Curve64, Curve64)> {
    let (bins, c) = pair_fsc(va, vb)?;
    let mut fsi = fisher_information(&c, 1.0, p.clamp_eps);
    fsi.label = "fsi".into();
    let fsi_r = if by_counts {
        weighted_information_by_counts(&c, &bins, p)?
    } else {
        weighted_information(&c, p)?
    };
    Ok((c, fsi, fsi_r))
}

fn cmd_fsi(a: &FsiArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let (va, vb) = load_pair(&a.pair)?;
    let p = info_params(&a.info, cfg, va.ndim())?;
    let (lo, hi) = band(&a.band, cfg);
    let mut kv = vec![("dims", dims_str(va.dims())), ("step", format!("{:?}", va.step()))];
    kv.extend(info_kv(&p));
    kv.push(("band", format!("[{lo:?},{hi:?})")));
    kv.push(("by_counts", a.by_counts.to_string()));
    w.params("fsi", &kv);
    let (c, fsi, fsi_r) = info_curves(&va, &vb, &p, a.by_counts)?;
    let saturated = fsi.flags.iter().filter(|f| f.contains(fscinfo::ShellFlags::SATURATED)).count();
    if saturated > 0 {
        w.line(format!("warning: {saturated} shell(s) clamped at the correlation limit"));
    }
    let gic = integrated_information(&fsi_r, lo, hi)?;
    w.line(format!("gic: {gic:.6} bits"));
    if let Some(path) = &a.out {
        let f = CurveFile::new(va.dims(), va.step(), vec![c, fsi.clone(), fsi_r.clone()])?
            .with_param("kappa", p.kappa)
            .with_param("clamp_eps", p.clamp_eps);
        save_curves(path, &f, w)?;
    }
    if let Some(path) = &a.svg {
        let panels = [
            Panel::new("FSI", vec![&fsi]).y_label("bits"),
            Panel::new("weighted FSI", vec![&fsi_r]).y_label("bits"),
        ];
        write_svg(&panels, 2, path)?;
        w.line(format!("wrote {}", path.display()));
    }
    Ok(())
}

fn cmd_gic(a: &GicArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let (va, vb) = load_pair(&a.pair)?;
    let p = info_params(&a.info, cfg, va.ndim())?;
    let (lo, hi) = band(&a.band, cfg);
    let mut kv = vec![("dims", dims_str(va.dims())), ("step", format!("{:?}", va.step()))];
    kv.extend(info_kv(&p));
    kv.push(("band", format!("[{lo:?},{hi:?})")));
    kv.push(("by_counts", a.by_counts.to_string()));
    w.params("gic", &kv);
    let (_, _, fsi_r) = info_curves(&va, &vb, &p, a.by_counts)?;
    let gic = integrated_information(&fsi_r, lo, hi)?;
    w.line(format!("gic: {gic:.6} bits"));
    Ok(())
}

fn window_spec(o: &WindowOpts, cfg: &Config) -> Result<WindowSpec> {
    Ok(WindowSpec::new(
        pick(o.window, cfg.window_size, DEFAULT_WINDOW),
        pick(o.stride, cfg.window_stride, DEFAULT_STRIDE),
        pick(o.mask_sigma, cfg.mask_sigma_frac, DEFAULT_MASK_SIGMA_FRAC),
    )?)
}

fn window_kv(ws: &WindowSpec, fill: f64) -> Vec<(&'static str, String)> {
    vec![
        ("window", ws.size.to_string()),
        ("stride", ws.stride.to_string()),
        ("mask_sigma", format!("{:?}", ws.mask_sigma_frac)),
        ("fill", format!("{fill:?}")),
    ]
}

fn summarize_map(m: &InfoMap64, w: &mut Report) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sat = 0;
    let mut unevaluated = 0;
    for (&v, &s) in m.values().iter().zip(m.states()) {
        match s {
            CellState::Unevaluated => unevaluated += 1,
            CellState::Saturated => sat += 1,
            CellState::Evaluated => {}
        }
        if s != CellState::Unevaluated {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    match m.evaluated_mean() {
        Some(mean) => w.line(format!("map: mean {mean:.6} min {lo:.6} max {hi:.6} bits")),
        None => w.line("map: no evaluated cells"),
    }
    if sat > 0 {
        w.line(format!("warning: {sat} cell(s) from windows with clamped correlations"));
    }
    if unevaluated > 0 {
        w.line(format!("{unevaluated} cell(s) unevaluated"));
    }
}

fn local_params(ndim: usize, eps: Option<f64>, cfg: &Config) -> Result<InfoParams> {
    Ok(InfoParams::from_fill(ndim, 1.0)?.with_clamp_eps(pick(eps, cfg.clamp_eps, DEFAULT_CLAMP_EPS))?)
}

fn cmd_lid(a: &LidArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let (va, vb) = load_pair(&a.pair)?;
    let ws = window_spec(&a.window, cfg)?;
    let (lo, hi) = band(&a.band, cfg);
    let p = local_params(va.ndim(), a.clamp_eps, cfg)?;
    let mut kv = vec![("dims", dims_str(va.dims())), ("step", format!("{:?}", va.step()))];
    kv.extend(window_kv(&ws, a.window.fill));
    kv.push(("band", format!("[{lo:?},{hi:?})")));
    kv.push(("clamp_eps", format!("{:?}", p.clamp_eps)));
    w.params("lid", &kv);
    let m = lid_map(&va, &vb, &ws, &p, lo, hi)?;
    summarize_map(&m, w);
    write_info_map(&m, a.window.fill, &a.out)?;
    w.line(format!("wrote {}", a.out.display()));
    Ok(())
}

fn cmd_lcid(a: &LcidArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let mut m1 = load_volume(&a.m1)?;
    let mut m2 = load_volume(&a.m2)?;
    let ws = window_spec(&a.window, cfg)?;
    let (lo, hi) = band(&a.band, cfg);
    let mut kv = vec![
        ("dims", dims_str(m1.dims())),
        ("step1", format!("{:?}", m1.step())),
        ("step2", format!("{:?}", m2.step())),
    ];
    kv.extend(window_kv(&ws, a.window.fill));
    kv.push(("band", format!("[{lo:?},{hi:?})")));
    kv.push(("resample_to", a.resample_to.map_or("none".into(), |s| format!("{s:?}"))));
    kv.push(("magnification", a.magnification.map_or("none".into(), |s| format!("{s:?}"))));
    kv.push(("align", a.align.to_string()));
    kv.push(("amplitude_match", a.amplitude_match.to_string()));
    w.params("lcid", &kv);
    if let Some(s) = a.resample_to {
        m1 = fourier_resample(&m1, s)?;
        m2 = fourier_resample(&m2, s)?;
        w.line(format!("resampled to {} at {s:?}", dims_str(m1.dims())));
    }
    if let Some(s) = a.magnification {
        m2 = magnification_scale(&m2, s)?;
    }
    if m1.dims() != m2.dims() {
        return Err(CliError::Data(format!(
            "dimension mismatch after preparation: {} vs {}",
            dims_str(m1.dims()),
            dims_str(m2.dims())
        )));
    }
    if a.align {
        let al = translational_align(&m1, &m2)?;
        w.line(format!("alignment shift: {:?}", al.shift));
        m2 = al.aligned;
    }
    if a.amplitude_match {
        let bins = radial_bins(m1.dims(), m1.step())?;
        let am = amplitude_match(&forward_transform(&m1)?, &forward_transform(&m2.clone().with_step(m1.step())?)?, &bins)?;
        if !am.zero_power_shells.is_empty() {
            w.line(format!("warning: {} shell(s) with zero power left unmatched", am.zero_power_shells.len()));
        }
        m2 = inverse_transform(&am.spectrum)?;
    }
    let p = local_params(m1.ndim(), a.clamp_eps, cfg)?;
    let m = lcid_map(&m1, &m2, &ws, &p, lo, hi)?;
    summarize_map(&m, w);
    write_info_map(&m, a.window.fill, &a.out)?;
    w.line(format!("wrote {}", a.out.display()));
    Ok(())
}

fn cmd_tie(a: &TieArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let s_out = load_series(&a.output)?;
    let s_ref = load_series(&a.reference)?;
    let p = info_params(&a.info, cfg, 2)?;
    let floor = pick(a.floor, cfg.info_floor, DEFAULT_INFO_FLOOR);
    let env = a
        .envelope
        .then(|| pick(a.envelope_window, cfg.envelope_window, DEFAULT_ENVELOPE_WINDOW));
    let mut kv = vec![
        ("pairs_out", s_out.len().to_string()),
        ("pairs_ref", s_ref.len().to_string()),
        ("step", format!("{:?}", s_out.step())),
        ("relative", a.relative.to_string()),
        ("floor", format!("{floor:?}")),
        ("envelope", env.map_or("none".into(), |e| e.to_string())),
    ];
    kv.extend(info_kv(&p));
    w.params("tie", &kv);
    let mut f_out = accumulate_fri(&s_out, &p)?;
    f_out.label = "fri_out".into();
    let mut f_ref = accumulate_fri(&s_ref, &p)?;
    f_ref.label = if a.relative { "fri_out2" } else { "fri_in" }.into();
    let (num, den) = match env {
        Some(win) => {
            let mut e1 = envelope(&f_out, win)?;
            e1.label = format!("{} envelope", f_out.label);
            let mut e2 = envelope(&f_ref, win)?;
            e2.label = format!("{} envelope", f_ref.label);
            (e1, e2)
        }
        None => (f_out.clone(), f_ref.clone()),
    };
    let t = if a.relative {
        relative_tie_with_floor(&num, &den, floor)?
    } else {
        tie_with_floor(&num, &den, floor)?
    };
    let defined: Vec<f64> = t.values.iter().copied().filter(|v| v.is_finite()).collect();
    if defined.is_empty() {
        w.line("tie: undefined at every shell");
    } else {
        let mean = defined.iter().sum::<f64>() / defined.len() as f64;
        w.line(format!(
            "tie: mean {mean:.6} over {} defined shell(s) of {}",
            defined.len(),
            t.n_shells()
        ));
    }
    let mut curves = vec![f_out, f_ref];
    if env.is_some() {
        curves.push(num);
        curves.push(den);
    }
    curves.push(t);
    let dims = s_out.pairs()[0].0.dims().to_vec();
    if let Some(path) = &a.out {
        let f = CurveFile::new(&dims, s_out.step(), curves.clone())?.with_param("floor", floor);
        save_curves(path, &f, w)?;
    }
    if let Some(path) = &a.svg {
        let n = curves.len();
        let panels = [
            Panel::new("accumulated FRI", curves[..n - 1].iter().collect()).y_label("bits"),
            Panel::new("TIE", vec![&curves[n - 1]]).y_label("ratio"),
        ];
        write_svg(&panels, 2, path)?;
        w.line(format!("wrote {}", path.display()));
    }
    Ok(())
}

fn cmd_pic(a: &PicArgs, w: &mut Report) -> Result<()> {
    let p1 = load_packet(&a.p1, a.step)?;
    let p2 = load_packet(&a.p2, a.step)?;
    let mode = match a.mode {
        ModeArg::Literal => CccMode::Literal,
        ModeArg::Centered => CccMode::Centered,
    };
    let (route, scale, pic) = match a.space {
        SpaceArg::Real => {
            let b = match a.bandwidth {
                Some(b) => b,
                None => {
                    let e = estimate_bandwidth(&p1, DEFAULT_BANDWIDTH_POWER)?;
                    if e.dc_only {
                        return Err(CliError::Data("packet power is entirely at DC; pass --bandwidth".into()));
                    }
                    e.bandwidth
                }
            };
            ("real", ("bandwidth", b), pic_real(&p1, &p2, b, mode)?)
        }
        SpaceArg::Fourier => {
            let l = a.length.unwrap_or_else(|| p1.extent());
            ("fourier", ("length", l), pic_fourier(&p1, &p2, l, mode)?)
        }
    };
    w.params(
        "pic",
        &[
            ("samples", p1.len().to_string()),
            ("step", format!("{:?}", a.step)),
            ("mode", format!("{:?}", a.mode).to_lowercase()),
            ("space", route.into()),
            (scale.0, format!("{:?}", scale.1)),
        ],
    );
    w.line(format!("ccc: {:.6}", pic.correlation));
    w.line(format!("pic: {:.6} bits", pic.bits));
    if pic.saturated {
        w.line("warning: correlation clamped at the limit");
    }
    if let Some(rate) = a.rate {
        let t = fscinfo::packet::channel_throughput(pic.bits, rate)?;
        w.line(format!("throughput: {t:.6} bits/s"));
    }
    Ok(())
}

fn cmd_model(a: &ModelArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let n = pick(a.dims, cfg.dims, 64);
    let seed = pick(a.seed, cfg.seed, 1);
    let seeds = pick(a.seeds, cfg.seeds, 1).max(1);
    let base = ExperimentConfig::default();
    let ec = ExperimentConfig {
        dims: vec![n; 3],
        seed,
        blob_count: pick(a.blob_count, cfg.blob_count, base.blob_count),
        blob_sigma_range: base.blob_sigma_range,
        noise_to_signal: pick(a.noise_to_signal, cfg.noise_to_signal, base.noise_to_signal),
        band_ratio: pick(a.band_ratio, cfg.band_ratio, DEFAULT_BAND_RATIO),
    };
    w.params(
        "model-experiment",
        &[
            ("dims", dims_str(&ec.dims)),
            ("seed", seed.to_string()),
            ("seeds", seeds.to_string()),
            ("blob_count", ec.blob_count.to_string()),
            ("noise_to_signal", format!("{:?}", ec.noise_to_signal)),
            ("band_ratio", format!("{:?}", ec.band_ratio)),
        ],
    );
    let bins = radial_bins(&ec.dims, 1.0)?;
    let mut runs = Vec::with_capacity(seeds);
    let mut first = None;
    for i in 0..seeds {
        let c = ExperimentConfig {
            seed: seed.wrapping_add(2 * i as u64),
            ..ec.clone()
        };
        let r = run_experiment::<f64>(&c, &bins)?;
        w.line(format!(
            "seed {}: verdict {} (cross {:.4e}, noise-noise {:.4e}, band {} shells)",
            c.seed,
            r.report.verdict,
            r.report.cross_mean,
            r.report.noise_noise_mean,
            r.report.band.len()
        ));
        runs.push(serde_json::json!({"seed": c.seed, "sigma": r.sigma, "report": r.report}));
        if first.is_none() {
            first = Some(r);
        }
    }
    let first = first.expect("at least one seed");
    let dominant = runs
        .iter()
        .filter(|r| r["report"]["verdict"] == serde_json::to_value(Verdict::CrossTermsDominant).unwrap_or_default())
        .count();
    w.line(format!("cross terms dominant in {dominant}/{seeds} run(s)"));
    let d = &first.curves;
    let named = |c: &Curve64, label: &str| {
        let mut c = c.clone();
        c.label = label.into();
        c
    };
    let curves = vec![
        named(&d.fsc_ab, "fsc_ab"),
        named(&d.t_ss, "t_ss"),
        named(&d.t_sn1, "t_sn1"),
        named(&d.t_sn2, "t_sn2"),
        named(&d.t_n1n2, "t_n1n2"),
    ];
    if let Some(path) = &a.out {
        let f = CurveFile::new(&ec.dims, 1.0, curves.clone())?
            .with_param("seed", seed)
            .with_param("noise_to_signal", ec.noise_to_signal);
        save_curves(path, &f, w)?;
    }
    if let Some(path) = &a.report {
        let v = serde_json::json!({"config": ec, "seeds": seeds, "cross_terms_dominant": dominant, "runs": runs});
        let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Data(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        w.line(format!("wrote {}", path.display()));
    }
    if let Some(path) = &a.svg {
        let panels = [
            Panel::new("FSC of A and B", vec![&curves[0]]).y_label("correlation"),
            Panel::new("N1·N2*", vec![&curves[4]]).y_label("per-cell term"),
            Panel::new("N1·S* and S·N2*", vec![&curves[2], &curves[3]]).y_label("per-cell term"),
            Panel::new("S·S*", vec![&curves[1]]).y_label("per-cell term"),
        ];
        write_svg(&panels, 2, path)?;
        w.line(format!("wrote {}", path.display()));
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs, cfg: &Config, w: &mut Report) -> Result<()> {
    let v = load_volume(&a.map)?;
    let band_tol = pick(None, cfg.band_limit_tol, defaults::BAND_LIMIT_TOL);
    let corner_tol = pick(None, cfg.corner_tol, defaults::CORNER_TOL);
    let margin = pick(None, cfg.apodization_margin, defaults::APODIZATION_MARGIN);
    let apod_tol = pick(None, cfg.apodization_tol, defaults::APODIZATION_TOL);
    w.params(
        "check",
        &[
            ("dims", dims_str(v.dims())),
            ("step", format!("{:?}", v.step())),
            ("band_limit_tol", format!("{band_tol:?}")),
            ("corner_tol", format!("{corner_tol:?}")),
            ("apodization_margin", format!("{margin:?}")),
            ("apodization_tol", format!("{apod_tol:?}")),
            (
                "claimed_resolution",
                a.claimed_resolution.map_or("none".into(), |r| format!("{r:?}")),
            ),
        ],
    );
    let bins = radial_bins(v.dims(), v.step())?;
    let s = forward_transform(&v)?;
    let mut reports: Vec<ComplianceReport> = vec![check_band_limit(&s, &bins, TWO_THIRDS, band_tol)?];
    match check_corner_emptiness(&s, &bins, corner_tol) {
        Ok(r) => reports.push(r),
        Err(fscinfo::Error::Inapplicable(msg)) => w.line(format!("G corner_emptiness: not applicable ({msg})")),
        Err(e) => return Err(e.into()),
    }
    reports.push(check_real_space_apodization(&v, margin, apod_tol)?);
    if let Some(r) = a.claimed_resolution {
        reports.push(check_sampling_claim(v.step(), r)?);
    }
    for r in &reports {
        w.line(format!(
            "{:?} {}: {} (measured {:.3e}, tolerance {:.1e}) {}",
            r.check,
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.measured_fraction,
            r.tolerance,
            r.finding
        ));
        for warning in &r.warnings {
            w.line(format!("warning: {warning}"));
        }
    }
    let fd = filling_degree(&v, DEFAULT_FILL_LEVEL)?;
    w.line(format!("filling degree: kappa {:.4}, D/L {:.4}", fd.kappa, fd.d_over_l));
    if let Some(path) = &a.json {
        let doc = serde_json::json!({"reports": reports, "filling_degree": fd});
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Data(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        w.line(format!("wrote {}", path.display()));
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if a.strict && failed > 0 {
        return Err(CliError::Compliance { failed });
    }
    Ok(())
}

fn cmd_resample(a: &ResampleArgs, w: &mut Report) -> Result<()> {
    let v = load_volume(&a.input)?;
    w.params(
        "resample",
        &[
            ("dims", dims_str(v.dims())),
            ("step", format!("{:?}", v.step())),
            ("target_step", format!("{:?}", a.step)),
            ("magnification", a.magnification.map_or("none".into(), |s| format!("{s:?}"))),
        ],
    );
    let mut r = fourier_resample(&v, a.step)?;
    if let Some(s) = a.magnification {
        r = magnification_scale(&r, s)?;
    }
    w.line(format!("resampled {} -> {}", dims_str(v.dims()), dims_str(r.dims())));
    write_mrc(&r, &a.out)?;
    w.line(format!("wrote {}", a.out.display()));
    Ok(())
}

fn cmd_fetch(a: &FetchArgs, w: &mut Report) -> Result<()> {
    let mut opts = EmdbOptions::from_env();
    if let Some(c) = &a.cache {
        opts.cache_dir = c.clone();
    }
    w.params(
        "fetch-emdb",
        &[("id", a.id.clone()), ("cache", opts.cache_dir.display().to_string())],
    );
    let p = fetch_emdb(&a.id, &opts)?;
    w.line(p.display().to_string());
    Ok(())
}

fn cmd_plot(a: &PlotArgs, w: &mut Report) -> Result<()> {
    let f = read_curves(&a.curves)?;
    w.params(
        "plot",
        &[
            ("curves", f.curves.len().to_string()),
            ("threshold", a.threshold.clone().unwrap_or_else(|| "auto".into())),
        ],
    );
    let thr = match &a.threshold {
        Some(l) => Some(
            f.get(l)
                .ok_or_else(|| CliError::Usage(format!("no curve labelled {l:?}")))?,
        ),
        None => f.curves.iter().find(|c| c.kind == CurveKind::Threshold),
    };
    let shown: Vec<&Curve64> = f
        .curves
        .iter()
        .filter(|c| thr.is_none_or(|t| !std::ptr::eq(*c, t)))
        .collect();
    if shown.is_empty() {
        return Err(CliError::Data("no curves to plot".into()));
    }
    let title = a.title.clone().unwrap_or_else(|| {
        a.curves
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let mut panel = Panel::new(title, shown.clone());
    if let Some(t) = thr {
        panel = panel.threshold(t);
        if let Some(c) = shown.iter().find(|c| c.kind == CurveKind::Fsc) {
            if let Some(m) = crossing_marker(c, t)? {
                panel = panel.marker(m);
            }
        }
    }
    write_svg(&[panel], 1, &a.out)?;
    w.line(format!("wrote {}", a.out.display()));
    Ok(())
}
