//! One function per subcommand. Every command receives the resolved
//! configuration and the started manifest, writes its artifacts into the
//! output directory, and records each file name in the manifest.
//!
//! All randomness flows through named streams of the root seed, so a given
//! configuration and seed always produce identical artifact bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use graphon_core::experiments::{
    run_conditioning_frequency, run_invariance_suite, run_rate_experiment, RateConfig,
};
use graphon_core::io;
use graphon_core::packing::{
    fano_diagnostics, greedy_frame_packing, max_scale, CenteredFrame, PackingSet,
};
use graphon_core::sampler::{
    default_bin_count, probability_matrix, sample_adjacency, sample_latents,
    sample_latents_conditioned,
};
use graphon_core::spectra::{tail_decay_certificate, TailCertificate};
use graphon_core::usvt::usvt_estimate;
use graphon_core::{LatentSample, StreamRng, UsvtConfig};
use serde::Serialize;

use crate::config::{build_graphon, parse_map, RunConfig};
use crate::manifest::Manifest;

/// Singular values listed in the estimate sidecar.
const SIDECAR_SINGULAR_VALUES: usize = 10;

fn artifact_path(out_dir: &Path, manifest: &mut Manifest, name: &str) -> std::path::PathBuf {
    manifest.record(name);
    out_dir.join(name)
}

fn write_json(
    out_dir: &Path,
    manifest: &mut Manifest,
    name: &str,
    value: &impl Serialize,
) -> Result<()> {
    let path = artifact_path(out_dir, manifest, name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_text(
    out_dir: &Path,
    manifest: &mut Manifest,
    name: &str,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<(), io::IoError>,
) -> Result<()> {
    let path = artifact_path(out_dir, manifest, name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut writer = BufWriter::new(file);
    write(&mut writer).with_context(|| format!("cannot write {}", path.display()))?;
    writer
        .flush()
        .with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct SampleSummary {
    n: usize,
    seed: u64,
    stream: u64,
    conditioned: bool,
    attempts: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    bins: Option<usize>,
    edge_count: usize,
    density: f64,
}

/// `sample`: draw latents, build the probability matrix, sample one graph.
pub fn sample(config: &RunConfig, out_dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let graphon = build_graphon(&config.graphon)?;
    let n = config.sample.n;
    if n == 0 {
        bail!("sample.n must be at least 1");
    }
    let mut rng = StreamRng::new(config.seed, config.sample.stream);
    let (latents, attempts, bins): (LatentSample, u32, Option<usize>) = if config.sample.conditioned
    {
        let bins = default_bin_count(n);
        let bounds = config.conditioning.bounds()?;
        let draw =
            sample_latents_conditioned(n, bins, &bounds, &mut rng, config.sample.max_attempts)
                .context("conditioned latent draw failed")?;
        (draw.latents, draw.attempts, Some(bins))
    } else {
        (sample_latents(n, &mut rng), 1, None)
    };
    let matrix = probability_matrix(&graphon, &latents)?;
    let adjacency = sample_adjacency(&matrix, &mut rng);

    write_text(out_dir, manifest, "latents.txt", |w| {
        io::write_latents(w, &latents)
    })?;
    write_text(out_dir, manifest, "probability.txt", |w| {
        io::write_matrix(w, matrix.entries())
    })?;
    write_text(out_dir, manifest, "adjacency.txt", |w| {
        io::write_adjacency(w, &adjacency)
    })?;
    let summary = SampleSummary {
        n,
        seed: config.seed,
        stream: config.sample.stream,
        conditioned: config.sample.conditioned,
        attempts,
        bins,
        edge_count: adjacency.edge_count(),
        density: adjacency.density(),
    };
    write_json(out_dir, manifest, "sample_summary.json", &summary)
}

#[derive(Serialize)]
struct EstimateSummary {
    n: usize,
    threshold_scale: f64,
    tau: f64,
    retained_rank: usize,
    retained: Vec<usize>,
    top_singular_values: Vec<f64>,
}

/// `estimate`: read an adjacency file and run the thresholding estimator.
pub fn estimate(
    config: &RunConfig,
    input: &Path,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    let file = File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let adjacency = io::read_adjacency(BufReader::new(file))
        .with_context(|| format!("invalid adjacency file {}", input.display()))?;
    let usvt = UsvtConfig::with_scale(config.estimate.c);
    let result = usvt_estimate(&adjacency, &usvt).context("estimation failed")?;

    write_text(out_dir, manifest, "estimate.txt", |w| {
        io::write_matrix(w, result.matrix())
    })?;
    let summary = EstimateSummary {
        n: adjacency.n(),
        threshold_scale: config.estimate.c,
        tau: result.tau(),
        retained_rank: result.retained_rank(),
        retained: result.retained().to_vec(),
        top_singular_values: result
            .singular_values()
            .iter()
            .take(SIDECAR_SINGULAR_VALUES)
            .copied()
            .collect(),
    };
    write_json(out_dir, manifest, "estimate_summary.json", &summary)?;
    println!(
        "estimate: n = {}, tau = {}, retained rank = {}",
        summary.n, summary.tau, summary.retained_rank
    );
    Ok(())
}

/// `spectra certify`: tail-decay certificates at each configured cut.
///
/// Pass/fail is data, not an exit code: each certificate's `pass` field and
/// log line record whether the Monte Carlo tail stayed under the bound.
pub fn spectra_certify(config: &RunConfig, out_dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let graphon = build_graphon(&config.graphon)?;
    let s = &config.spectra;
    if s.cuts.is_empty() {
        bail!("spectra.cuts must list at least one cut");
    }
    let mut certificates: Vec<TailCertificate> = Vec::with_capacity(s.cuts.len());
    for &cut in &s.cuts {
        let certificate = tail_decay_certificate(
            &graphon,
            s.n,
            cut,
            s.replicates,
            config.seed,
            s.stream_block,
        )
        .with_context(|| format!("certificate at cut {cut} failed"))?;
        println!(
            "cut {}: mc {} vs bound {} -> {}",
            cut,
            certificate.mc_estimate,
            certificate.bound,
            if certificate.pass { "pass" } else { "FAIL" }
        );
        certificates.push(certificate);
    }
    write_text(out_dir, manifest, "certificates.csv", |w| {
        io::write_certificates_csv(w, &certificates)
    })
}

#[derive(Serialize)]
struct PackingCertificate {
    m: usize,
    k: usize,
    delta: f64,
    target: usize,
    budget: usize,
    size: usize,
    /// Certified pairwise floor `δ·k` on squared projection distance.
    delta_times_k: f64,
    min_separation: f64,
    /// Certified entrywise bound on the projectors.
    linf_bound: f64,
    max_linf: f64,
}

/// `packing build`: greedy search, then frames + certificate artifacts.
pub fn packing_build(config: &RunConfig, out_dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let p = &config.packing;
    let mut rng = StreamRng::new(config.seed, p.stream);
    let packing = greedy_frame_packing(p.m, p.k, p.delta, p.target, p.budget, &mut rng)
        .context("packing search failed")?;
    write_text(out_dir, manifest, "frames.txt", |w| {
        io::write_frames(w, packing.frames())
    })?;
    let certificate = PackingCertificate {
        m: p.m,
        k: p.k,
        delta: p.delta,
        target: p.target,
        budget: p.budget,
        size: packing.len(),
        delta_times_k: packing.delta_times_k(),
        min_separation: packing.min_separation(),
        linf_bound: packing.linf_bound(),
        max_linf: packing.max_linf(),
    };
    write_json(out_dir, manifest, "packing_certificate.json", &certificate)?;
    println!(
        "packing: {} frames, min separation {} (floor {})",
        certificate.size, certificate.min_separation, certificate.delta_times_k
    );
    Ok(())
}

#[derive(Serialize)]
struct VerificationReport {
    frames: usize,
    m: usize,
    k: usize,
    required_separation: f64,
    min_separation: f64,
    max_linf: f64,
}

/// `packing verify`: re-validate a stored frame set against the configured
/// separation level. Frame-level invariants (orthonormal, centered columns)
/// are checked while reading; any violation names the failed invariant and
/// exits nonzero.
pub fn packing_verify(
    config: &RunConfig,
    frames_path: &Path,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    let file = File::open(frames_path)
        .with_context(|| format!("cannot open {}", frames_path.display()))?;
    let frames = io::read_frames(BufReader::new(file))
        .with_context(|| format!("invalid frame file {}", frames_path.display()))?;
    if frames.is_empty() {
        bail!("frame file {} contains no frames", frames_path.display());
    }
    let (m, k) = (frames[0].rows(), frames[0].cols());
    let required_separation = config.packing.delta * k as f64;
    let max_linf = frames
        .iter()
        .map(CenteredFrame::projector_linf)
        .fold(0.0_f64, f64::max);
    let packing = PackingSet::from_frames(frames, required_separation, max_linf)
        .context("stored frames violate the packing certificates")?;
    let report = VerificationReport {
        frames: packing.len(),
        m,
        k,
        required_separation,
        min_separation: packing.min_separation(),
        max_linf: packing.max_linf(),
    };
    write_json(out_dir, manifest, "verification.json", &report)?;
    println!(
        "verified {} frames: min separation {} >= {}",
        report.frames, report.min_separation, report.required_separation
    );
    Ok(())
}

/// `fano report`: build the packing, draw conditioned latents, and measure
/// the separation/KL budget diagnostics of the induced family.
pub fn fano_report(config: &RunConfig, out_dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let p = &config.packing;
    let mut packing_rng = StreamRng::new(config.seed, p.stream);
    let packing = greedy_frame_packing(p.m, p.k, p.delta, p.target, p.budget, &mut packing_rng)
        .context("packing search failed")?;
    let bounds = config.conditioning.bounds()?;
    let mut latent_rng = StreamRng::new(config.seed, config.fano.stream);
    let draw = sample_latents_conditioned(
        config.fano.n,
        packing.rows(),
        &bounds,
        &mut latent_rng,
        config.fano.max_attempts,
    )
    .context("conditioned latent draw failed (fano.n may be too small for the bin count)")?;
    let scale = match config.fano.scale {
        Some(scale) => scale,
        None => max_scale(&packing, config.fano.rate).context("no feasible perturbation scale")?,
    };
    let report = fano_diagnostics(&packing, &draw.latents, &bounds, config.fano.rate, scale)
        .context("fano diagnostics failed")?;
    write_json(out_dir, manifest, "fano.json", &report)?;
    println!(
        "fano: {} hypotheses, separation {}, ratio {}",
        report.frames, report.alpha_n, report.fano_ratio
    );
    Ok(())
}

/// `experiment rate`: the sample → estimate → score loop over the size grid.
pub fn experiment_rate(config: &RunConfig, out_dir: &Path, manifest: &mut Manifest) -> Result<()> {
    let graphon = build_graphon(&config.graphon)?;
    let e = &config.experiment;
    let rate_config = RateConfig {
        n_grid: e.n_grid.clone(),
        replicates: e.replicates,
        seed: config.seed,
        stream_block: e.stream_block,
        usvt: UsvtConfig::with_scale(config.estimate.c),
    };
    let result = run_rate_experiment(&graphon, &rate_config).context("rate experiment failed")?;
    write_text(out_dir, manifest, "rate_rows.csv", |w| {
        io::write_rate_rows_csv(w, &result.rows)
    })?;
    write_text(out_dir, manifest, "rate_summary.csv", |w| {
        io::write_rate_summary_csv(w, &result.summary)
    })?;
    write_json(out_dir, manifest, "fit.json", &result.fit)?;
    match result.fit {
        Some(fit) => println!(
            "rate: fitted slope {} (r2 {}), theory {}",
            fit.slope,
            fit.r2,
            fit.theory_slope
                .map_or_else(|| "n/a".to_owned(), |slope| slope.to_string()),
        ),
        None => println!("rate: single grid point, no fit"),
    }
    if !result.inversions.is_empty() {
        println!(
            "rate: mean MSE inversions at grid indices {:?}",
            result.inversions
        );
    }
    Ok(())
}

/// `experiment conditioning`: occupancy-event frequencies by simulation.
pub fn experiment_conditioning(
    config: &RunConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    let e = &config.experiment;
    let mut rng = StreamRng::new(config.seed, e.stream_block);
    let report = run_conditioning_frequency(
        e.n,
        e.trials,
        config.conditioning.lower_ratio,
        config.conditioning.upper_ratio,
        &mut rng,
    )
    .context("conditioning experiment failed")?;
    write_json(out_dir, manifest, "conditioning.json", &report)?;
    println!(
        "conditioning: joint frequency {} over {} trials ({} bins)",
        report.joint.frequency, report.trials, report.bins
    );
    Ok(())
}

/// `experiment invariance`: spectra before/after measure-preserving maps.
pub fn experiment_invariance(
    config: &RunConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    let graphon = build_graphon(&config.graphon)?;
    let e = &config.experiment;
    if e.maps.is_empty() {
        bail!("experiment.maps must list at least one map");
    }
    let maps = e
        .maps
        .iter()
        .map(|label| parse_map(label))
        .collect::<Result<Vec<_>>>()?;
    let rows = run_invariance_suite(&graphon, &maps, e.grid).context("invariance suite failed")?;
    write_json(out_dir, manifest, "invariance.json", &rows)?;
    for row in &rows {
        println!(
            "map {}: max spectrum deviation {}",
            row.map, row.max_deviation
        );
    }
    Ok(())
}
