use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pcgeo::codec::CodecError;
use pcgeo::config::{Flavor, RunConfig};
use pcgeo::harness::{
    bd_table, bitstream_path, format_bd_table, read_metric_csv, render_svg, run_jobs, write_bd_csv, write_encode_log,
    write_metric_csv, MetricRow, Series,
};
use pcgeo::pipeline::{decode_cloud, ensure_normals, rd_point, PipelineParams};
use pcgeo::pointcloud::{load_ply, save_ply, voxelize, PlyError, PointCloud};
use pcgeo::projection::{project_cloud, write_pbm, write_pgm16};
use pcgeo::synth::{generate_pair, SynthKind, SynthParams};
use pcgeo::Error;

#[derive(Parser)]
#[command(name = "pcgeo", version, about = "Point-cloud geometry coding and evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode clouds at every (qp, flavor) and log bits and quality.
    Encode(EncodeArgs),
    /// Decode a bitstream to a PLY cloud.
    Decode {
        bitstream: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Geometry metrics of a reconstruction against its reference.
    Eval(EvalArgs),
    /// BD-rate table of a test metric CSV against an anchor.
    Bdrate {
        anchor: PathBuf,
        test: PathBuf,
        /// Also write the table as CSV.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Plot R-D curves from metric CSVs as SVG.
    Rdcurve {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "d2")]
        metric: Metric,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write a deterministic synthetic frame pair as PLY.
    Synth(SynthArgs),
    /// Encode with every flavor and compare each against the baseline.
    Ablate(EncodeArgs),
    /// Voxelize a PLY cloud, optionally estimating normals.
    Convert {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        bit_depth: u8,
        /// Estimate normals from this many neighbours.
        #[arg(long)]
        normals: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    D1,
    D2,
}

#[derive(Args)]
struct EncodeArgs {
    /// Input PLY clouds.
    inputs: Vec<PathBuf>,
    /// Synthetic inputs (plane, ramp, cube, wavy).
    #[arg(long, value_delimiter = ',')]
    synth: Vec<SynthKind>,
    /// `key = value` run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated QPs, 0 (lossless) to 51 [default: 32,28,24,20,16].
    #[arg(long, value_delimiter = ',')]
    qp: Vec<u8>,
    /// Comma-separated flavors: baseline, epm, om, non_om, epm_om.
    #[arg(long, value_delimiter = ',')]
    flavors: Vec<Flavor>,
    /// Surface thickness of the far layer [default: 4].
    #[arg(long)]
    tau: Option<u16>,
    /// Scale the far-layer Lagrange multiplier by the CTU surface angle.
    #[arg(long)]
    epm_rdo: bool,
    /// Refine merge predictions by +1 on occupied pixels.
    #[arg(long)]
    om_merge: bool,
    /// Refine merge predictions by +1 on every pixel.
    #[arg(long)]
    non_om_merge: bool,
    /// Packed frame width, a multiple of 64 [default: 640].
    #[arg(long)]
    frame_width: Option<usize>,
    /// Voxel grid bit depth [default: 10].
    #[arg(long)]
    bit_depth: Option<u8>,
    /// Seed for synthetic inputs [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
    /// Write the source near/far depth frames and occupancy maps.
    #[arg(long)]
    dump_frames: bool,
}

#[derive(Args)]
struct EvalArgs {
    reference: PathBuf,
    recon: PathBuf,
    /// Take the geometry bit count and qp from this bitstream.
    #[arg(long)]
    bitstream: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long, default_value_t = pcgeo::pipeline::DEFAULT_NORMAL_K)]
    normal_k: usize,
    #[arg(long, default_value_t = pcgeo::metrics::DEFAULT_PEAK_FACTOR)]
    peak_factor: f64,
    /// Sequence name for the CSV row [default: reference file stem].
    #[arg(long)]
    seq: Option<String>,
    /// QP for the CSV row [default: taken from --bitstream, else 0].
    #[arg(long)]
    qp: Option<u8>,
    /// Write the CSV here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    kind: SynthKind,
    #[arg(long, default_value_t = 64)]
    size: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long, default_value_t = 0.7)]
    thickness_prob: f64,
    #[arg(long, default_value_t = 3)]
    max_thickness: u32,
    #[arg(long, default_value_t = 1.0)]
    relief: f64,
    /// Output directory; files are `<kind>_0.ply` and `<kind>_1.ply`.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Corrupt(String),
    Metric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Corrupt(_) => 3,
            Failure::Metric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Corrupt(m) | Failure::Metric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_) | Error::Projection(_) | Error::Codec(CodecError::InvalidConfig(_)) => Failure::Usage(msg),
            Error::Codec(_) => Failure::Corrupt(msg),
            Error::Metric(_) => Failure::Metric(msg),
            Error::Io(_) | Error::Ply(_) | Error::Csv(_) | Error::PointCloud(_) | Error::Epm(_) => Failure::Io(msg),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<PlyError> for Failure {
    fn from(e: PlyError) -> Self {
        Failure::Io(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn io_at(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_at(path))?))
}

fn load_cloud(path: &Path, bit_depth: u8) -> CliResult<PointCloud> {
    let raw = load_ply(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(voxelize(&raw, bit_depth).map_err(Error::from)?)
}

fn seq_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "cloud".into(), |s| s.to_string_lossy().into_owned())
}

fn run_config(args: &EncodeArgs, ablate: bool) -> CliResult<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if !args.qp.is_empty() {
        cfg.qps = args.qp.clone();
    }
    if args.epm_rdo || args.om_merge || args.non_om_merge {
        if ablate || !args.flavors.is_empty() {
            return Err(Failure::Usage("tool flags and --flavors (or ablate) are exclusive".into()));
        }
        cfg.flavors = vec![match (args.epm_rdo, args.om_merge, args.non_om_merge) {
            (_, true, true) => return Err(Failure::Usage("--om-merge and --non-om-merge are exclusive".into())),
            (true, true, false) => Flavor::EpmOm,
            (true, false, false) => Flavor::Epm,
            (false, true, false) => Flavor::Om,
            (false, false, true) => Flavor::NonOm,
            (true, false, true) => return Err(Failure::Usage("--epm-rdo with --non-om-merge is not a supported flavor".into())),
            (false, false, false) => unreachable!(),
        }];
    } else if !args.flavors.is_empty() {
        cfg.flavors = args.flavors.clone();
    } else if args.config.is_none() && !ablate {
        cfg.flavors = vec![Flavor::Baseline];
    }
    if ablate {
        if !cfg.flavors.contains(&Flavor::Baseline) {
            cfg.flavors.insert(0, Flavor::Baseline);
        }
    }
    if let Some(t) = args.tau {
        cfg.tau = t;
    }
    if let Some(w) = args.frame_width {
        cfg.frame_width = w;
    }
    if let Some(b) = args.bit_depth {
        cfg.bit_depth = b;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn inputs(args: &EncodeArgs, cfg: &RunConfig, ablate: bool) -> CliResult<Vec<(String, PointCloud)>> {
    let mut out = Vec::new();
    for p in &args.inputs {
        out.push((seq_name(p), load_cloud(p, cfg.bit_depth)?));
    }
    let kinds = if args.synth.is_empty() && args.inputs.is_empty() && ablate {
        SynthKind::ALL.to_vec()
    } else {
        args.synth.clone()
    };
    for kind in kinds {
        let params = SynthParams {
            bit_depth: cfg.bit_depth,
            seed: cfg.seed,
            ..Default::default()
        };
        let (frame, _) = generate_pair(kind, &params).map_err(Error::from)?;
        out.push((kind.to_string(), frame));
    }
    if out.is_empty() {
        return Err(Failure::Usage("no inputs: give PLY paths or --synth".into()));
    }
    let mut names: Vec<_> = out.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::Usage("input sequence names must be unique".into()));
    }
    Ok(out)
}

fn dump_frames(dir: &Path, inputs: &[(String, PointCloud)], cfg: &RunConfig) -> CliResult<()> {
    let dir = dir.join("frames");
    fs::create_dir_all(&dir).map_err(io_at(&dir))?;
    for (seq, cloud) in inputs {
        let params = cfg.pipeline(Flavor::Baseline, cfg.qps[0]);
        let with_normals = ensure_normals(cloud, params.normal_k)?;
        let proj = project_cloud(&with_normals, &params.projection).map_err(Error::from)?;
        let f = &proj.frames;
        write_pgm16(dir.join(format!("{seq}_near.pgm")), &f.near)?;
        write_pgm16(dir.join(format!("{seq}_far.pgm")), &f.far)?;
        write_pbm(dir.join(format!("{seq}_occupancy.pbm")), &f.occupancy)?;
    }
    Ok(())
}

fn cmd_encode(args: &EncodeArgs, ablate: bool) -> CliResult<()> {
    let cfg = run_config(args, ablate)?;
    let inputs = inputs(args, &cfg, ablate)?;
    let out = &args.out;
    let streams = out.join("bitstreams");
    fs::create_dir_all(&streams).map_err(io_at(&streams))?;
    if args.dump_frames {
        dump_frames(out, &inputs, &cfg)?;
    }

    let results = run_jobs(&inputs, &cfg)?;
    for r in &results {
        let path = bitstream_path(&streams, r);
        fs::write(&path, &r.bitstream).map_err(io_at(&path))?;
    }
    write_encode_log(create(&out.join("encode_log.csv"))?, &results)?;
    for &flavor in &cfg.flavors {
        let rows: Vec<MetricRow> = results.iter().filter(|r| r.flavor == flavor).map(MetricRow::from_job).collect();
        write_metric_csv(create(&out.join(format!("metrics_{flavor}.csv")))?, &rows)?;
    }

    let stdout = io::stdout();
    let mut so = stdout.lock();
    for r in &results {
        writeln!(
            so,
            "{:<10} {:<8} qp {:>2}  {:>8} bits  D1 {:>7.3} dB  D2 {:>7.3} dB",
            r.seq, r.flavor, r.qp, r.rd.bits_geometry, r.rd.d1_psnr, r.rd.d2_psnr
        )?;
    }
    if ablate {
        let anchor: Vec<MetricRow> = results
            .iter()
            .filter(|r| r.flavor == Flavor::Baseline)
            .map(MetricRow::from_job)
            .collect();
        for &flavor in cfg.flavors.iter().filter(|&&f| f != Flavor::Baseline) {
            let test: Vec<MetricRow> = results.iter().filter(|r| r.flavor == flavor).map(MetricRow::from_job).collect();
            let table = bd_table(&anchor, &test);
            let text = format_bd_table(&table);
            writeln!(so, "\n{flavor} vs baseline\n{text}")?;
            fs::write(out.join(format!("bd_{flavor}.txt")), &text).map_err(io_at(out))?;
            write_bd_csv(create(&out.join(format!("bd_{flavor}.csv")))?, &table)?;
        }
        for (seq, _) in &inputs {
            for (metric, label) in [(Metric::D1, "D1 PSNR (dB)"), (Metric::D2, "D2 PSNR (dB)")] {
                let series: Vec<Series> = cfg
                    .flavors
                    .iter()
                    .map(|&f| Series {
                        label: f.to_string(),
                        points: results
                            .iter()
                            .filter(|r| &r.seq == seq && r.flavor == f)
                            .map(|r| (r.rd.bits_geometry as f64, psnr_of(metric, r.rd.d1_psnr, r.rd.d2_psnr)))
                            .collect(),
                    })
                    .collect();
                let name = format!("rd_{seq}_{}.svg", metric_name(metric));
                fs::write(out.join(&name), render_svg(&series, seq, label)).map_err(io_at(out))?;
            }
        }
    }
    Ok(())
}

fn psnr_of(metric: Metric, d1: f64, d2: f64) -> f64 {
    match metric {
        Metric::D1 => d1,
        Metric::D2 => d2,
    }
}

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::D1 => "d1",
        Metric::D2 => "d2",
    }
}

fn cmd_decode(bitstream: &Path, out: &Path) -> CliResult<()> {
    let bytes = fs::read(bitstream).map_err(io_at(bitstream))?;
    let (cloud, _) = decode_cloud(&bytes)?;
    let mut w = create(out)?;
    pcgeo::pointcloud::write_ply(&mut w, &cloud)?;
    w.flush()?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let reference = load_cloud(&args.reference, args.bit_depth)?;
    let recon = load_cloud(&args.recon, args.bit_depth)?;
    let (bits, qp) = match &args.bitstream {
        Some(p) => {
            let bytes = fs::read(p).map_err(io_at(p))?;
            let decoded = pcgeo::codec::decode(&bytes).map_err(Error::from)?;
            (decoded.geometry_bits, decoded.header.qp)
        }
        None => (0, 0),
    };
    let params = PipelineParams {
        normal_k: args.normal_k,
        peak_factor: args.peak_factor,
        ..Default::default()
    };
    let rd = rd_point(&reference, &recon, bits, bits, &params)?;
    let row = MetricRow {
        seq: args.seq.clone().unwrap_or_else(|| seq_name(&args.reference)),
        qp: args.qp.unwrap_or(qp),
        bits_geometry: bits,
        d1_psnr: rd.d1_psnr,
        d2_psnr: rd.d2_psnr,
        points_missed: rd.points_missed,
    };
    match &args.out {
        Some(p) => write_metric_csv(create(p)?, &[row])?,
        None => write_metric_csv(io::stdout().lock(), &[row])?,
    }
    Ok(())
}

fn read_rows(path: &Path) -> CliResult<Vec<MetricRow>> {
    let f = File::open(path).map_err(io_at(path))?;
    Ok(read_metric_csv(f)?)
}

fn cmd_bdrate(anchor: &Path, test: &Path, out: Option<&Path>) -> CliResult<()> {
    let table = bd_table(&read_rows(anchor)?, &read_rows(test)?);
    if table.is_empty() {
        return Err(Failure::Metric("no sequence appears in both CSVs".into()));
    }
    print!("{}", format_bd_table(&table));
    if let Some(p) = out {
        write_bd_csv(create(p)?, &table)?;
    }
    let failed: Vec<String> = table
        .iter()
        .flat_map(|r| [("D1", &r.d1), ("D2", &r.d2)].map(|(m, v)| (r.seq.clone(), m, v.clone())))
        .filter_map(|(seq, m, v)| v.err().map(|e| format!("{seq} {m}: {e}")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Metric(failed.join("; ")))
    }
}

fn cmd_rdcurve(files: &[PathBuf], metric: Metric, out: &Path) -> CliResult<()> {
    let mut series = Vec::new();
    for f in files {
        let rows = read_rows(f)?;
        let mut seqs: Vec<&str> = rows.iter().map(|r| r.seq.as_str()).collect();
        seqs.sort_unstable();
        seqs.dedup();
        for seq in seqs {
            series.push(Series {
                label: format!("{} {seq}", seq_name(f)),
                points: rows
                    .iter()
                    .filter(|r| r.seq == seq)
                    .map(|r| (r.bits_geometry as f64, psnr_of(metric, r.d1_psnr, r.d2_psnr)))
                    .collect(),
            });
        }
    }
    let label = match metric {
        Metric::D1 => "D1 PSNR (dB)",
        Metric::D2 => "D2 PSNR (dB)",
    };
    let mut w = create(out)?;
    w.write_all(render_svg(&series, "R-D curves", label).as_bytes())?;
    w.flush()?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    if !(0.0..=1.0).contains(&args.thickness_prob) || args.relief < 0.0 || args.size == 0 {
        return Err(Failure::Usage("thickness-prob must lie in [0, 1], relief ≥ 0, size > 0".into()));
    }
    let params = SynthParams {
        size: args.size,
        bit_depth: args.bit_depth,
        thickness_prob: args.thickness_prob,
        max_thickness: args.max_thickness,
        relief: args.relief,
        seed: args.seed,
    };
    let (a, b) = generate_pair(args.kind, &params).map_err(Error::from)?;
    fs::create_dir_all(&args.out).map_err(io_at(&args.out))?;
    for (i, cloud) in [a, b].iter().enumerate() {
        save_ply(args.out.join(format!("{}_{i}.ply", args.kind)), cloud)?;
    }
    Ok(())
}

fn cmd_convert(input: &Path, out: &Path, bit_depth: u8, normals: Option<usize>) -> CliResult<()> {
    let mut cloud = load_cloud(input, bit_depth)?;
    if let Some(k) = normals {
        cloud = ensure_normals(&cloud.without_normals(), k)?;
    }
    let mut w = create(out)?;
    pcgeo::pointcloud::write_ply(&mut w, &cloud)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.cmd {
        Cmd::Encode(a) => cmd_encode(a, false),
        Cmd::Ablate(a) => cmd_encode(a, true),
        Cmd::Decode { bitstream, out } => cmd_decode(bitstream, out),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Bdrate { anchor, test, out } => cmd_bdrate(anchor, test, out.as_deref()),
        Cmd::Rdcurve { csv, metric, out } => cmd_rdcurve(csv, *metric, out),
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Convert {
            input,
            out,
            bit_depth,
            normals,
        } => cmd_convert(input, out, *bit_depth, *normals),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pcgeo: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
