use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::debug;

use netpath::heatmap::{render_netpath_csv, render_netpath_svg};
use netpath::io::load_network;
use netpath::report::{
    analysis_json, comparator_summary, error_json, render_json, render_paths_verbose, render_text,
    render_verbose, ComparatorSummary,
};
use netpath::{
    analyze_all, analyze_comparison, laplacian_pinv, AnalysisOptions, ComparisonAnalysis, Error,
    EvidenceNetwork, DEFAULT_FLOW_TOL, DEFAULT_PATH_CAP, DEFAULT_REF_TOL,
};

#[derive(Parser)]
#[command(
    name = "netpath",
    version,
    about = "Path-based inconsistency checks for network meta-analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Q statistic, p-value and number of independent paths.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Every pairwise comparison instead of a single one.
        #[arg(long, conflicts_with_all = ["from", "to"])]
        all: bool,
    },
    /// All evidence paths for one comparison.
    Paths {
        #[command(flatten)]
        common: Common,
    },
    /// Directed evidence flow for one comparison as CSV `from,to,flow`.
    Flow {
        #[command(flatten)]
        common: Common,
    },
    /// Hat-matrix row for one comparison over the observed edges.
    Hatmatrix {
        #[command(flatten)]
        common: Common,
    },
    /// Netpath disagreement matrix for one comparison.
    Netpath {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    /// Contrast-level data, CSV or JSON.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    to: Option<String>,
    /// Relative cutoff below which hat-matrix coefficients carry no flow.
    #[arg(long, default_value_t = DEFAULT_FLOW_TOL)]
    flow_tol: f64,
    /// Relative pivot cutoff for detecting dependent paths.
    #[arg(long, default_value_t = DEFAULT_REF_TOL)]
    ref_tol: f64,
    /// Abort once more paths than this are found.
    #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
    path_cap: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the Netpath plot here; `.svg` or `.csv`.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long, short)]
    verbose: bool,
    /// Longest loop, in treatments, for loop-specific tests.
    #[arg(long, default_value_t = 4)]
    loop_max_len: usize,
}

impl Common {
    fn options(&self) -> netpath::Result<AnalysisOptions> {
        for tol in [self.flow_tol, self.ref_tol] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::InvalidTolerance(tol));
            }
        }
        if self.path_cap == 0 {
            return Err(Error::InvalidCap);
        }
        Ok(AnalysisOptions {
            flow_tol: self.flow_tol,
            ref_tol: self.ref_tol,
            path_cap: self.path_cap,
        })
    }

    fn pair(&self) -> netpath::Result<(&str, &str)> {
        match (&self.from, &self.to) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InvalidComparison(
                "both --from and --to are required".into(),
            )),
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NumericalFailure(_) | Error::DomainError(_) => 3,
        Error::PathExplosion { .. } => 4,
        _ => 2,
    }
}

fn use_color() -> bool {
    std::env::var_os("NETPATH_NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn load(common: &Common) -> netpath::Result<(EvidenceNetwork, AnalysisOptions)> {
    let options = common.options()?;
    let network = load_network(&common.input)?;
    debug!(
        "loaded {} treatments, {} edges",
        network.n_nodes(),
        network.n_edges()
    );
    Ok((network, options))
}

fn analyze_pair(common: &Common) -> netpath::Result<(EvidenceNetwork, ComparisonAnalysis)> {
    let (network, options) = load(common)?;
    let (a, b) = common.pair()?;
    let laplacian = laplacian_pinv(&network)?;
    let analysis = analyze_comparison(&laplacian, &network, a, b, &options)?;
    Ok((network, analysis))
}

fn write_heatmap(path: &Path, analysis: &ComparisonAnalysis) -> netpath::Result<()> {
    let matrix = analysis
        .netpath
        .as_ref()
        .ok_or(Error::InsufficientPaths(analysis.report.n_independent))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let body = match ext.as_deref() {
        Some("svg") => {
            let title = format!(
                "{} vs {}",
                analysis.report.comparison.0, analysis.report.comparison.1
            );
            render_netpath_svg(matrix, Some(&title))?
        }
        Some("csv") => render_netpath_csv(matrix)?,
        _ => {
            return Err(Error::InvalidComparison(format!(
                "heatmap path must end in .svg or .csv: {}",
                path.display()
            )))
        }
    };
    std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn comparator_text(c: &ComparatorSummary) -> String {
    let mut out = String::new();
    match (&c.side_split, &c.side_split_note) {
        (Some(s), _) => out.push_str(&format!(
            "Side-splitting: direct {:.4} (var {:.4}), indirect {:.4} (var {:.4}), omega {:.4}, p {:.4}\n",
            s.direct_effect,
            s.direct_variance,
            s.indirect_effect,
            s.indirect_variance,
            s.test.omega,
            s.test.p_value
        )),
        (None, Some(note)) => out.push_str(&format!("Side-splitting: not available ({note})\n")),
        (None, None) => {}
    }
    for l in &c.loops {
        let names: Vec<&str> = l.treatments.iter().map(|t| t.as_str()).collect();
        out.push_str(&format!(
            "Loop {}: omega {:.4}, z {:.4}, p {:.4}\n",
            names.join("-"),
            l.test.omega,
            l.test.z,
            l.test.p_value
        ));
    }
    if let Some(note) = &c.loops_note {
        out.push_str(&format!("Loops: not available ({note})\n"));
    }
    out
}

fn summarize(
    network: &EvidenceNetwork,
    a: &ComparisonAnalysis,
    max_len: usize,
) -> ComparatorSummary {
    let (i, j) = &a.report.comparison;
    comparator_summary(network, i.as_str(), j.as_str(), max_len)
}

fn run_analyze(common: &Common, all: bool) -> netpath::Result<String> {
    if all {
        if common.heatmap.is_some() {
            return Err(Error::InvalidComparison(
                "--heatmap needs a single comparison".into(),
            ));
        }
        let (network, options) = load(common)?;
        let analyses = analyze_all(&network, &options)?;
        return Ok(match common.format {
            Format::Json => {
                let comps: Vec<_> = analyses
                    .iter()
                    .map(|a| summarize(&network, a, common.loop_max_len))
                    .collect();
                render_json(&analyses, Some(&comps))
            }
            Format::Text => {
                let reports: Vec<_> = analyses.iter().map(|a| a.report.clone()).collect();
                let mut out = render_text(&reports, use_color());
                if common.verbose {
                    for a in &analyses {
                        out.push('\n');
                        out.push_str(&render_verbose(a, &network));
                    }
                }
                out
            }
        });
    }

    let (network, analysis) = analyze_pair(common)?;
    if let Some(path) = &common.heatmap {
        write_heatmap(path, &analysis)?;
    }
    let comps = summarize(&network, &analysis, common.loop_max_len);
    Ok(match common.format {
        Format::Json => render_json(
            std::slice::from_ref(&analysis),
            Some(std::slice::from_ref(&comps)),
        ),
        Format::Text => {
            let mut out = render_text(std::slice::from_ref(&analysis.report), use_color());
            if common.verbose {
                out.push('\n');
                out.push_str(&render_verbose(&analysis, &network));
                out.push('\n');
                out.push_str(&comparator_text(&comps));
            }
            out
        }
    })
}

fn run_paths(common: &Common) -> netpath::Result<String> {
    let (network, analysis) = analyze_pair(common)?;
    Ok(match common.format {
        Format::Json => serde_json_pretty(&analysis_json(&analysis, None)),
        Format::Text if common.verbose => render_verbose(&analysis, &network),
        Format::Text => render_paths_verbose(&analysis),
    })
}

fn serde_json_pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run_flow(common: &Common) -> netpath::Result<String> {
    let (_, analysis) = analyze_pair(common)?;
    Ok(match common.format {
        Format::Json => serde_json_pretty(&analysis.flow),
        Format::Text => {
            let mut out = String::from("from,to,flow\n");
            for arc in &analysis.flow.arcs {
                out.push_str(&format!("{},{},{}\n", arc.from, arc.to, arc.flow));
            }
            out
        }
    })
}

fn run_hatmatrix(common: &Common) -> netpath::Result<String> {
    let (network, analysis) = analyze_pair(common)?;
    let labels: Vec<String> = (0..network.n_edges())
        .map(|k| network.edge_label(k))
        .collect();
    let coefficients: Vec<f64> = analysis.hat_row.coefficients.iter().copied().collect();
    Ok(match common.format {
        Format::Json => serde_json_pretty(&serde_json::json!({
            "comparison": analysis.report.label(),
            "edges": labels,
            "coefficients": coefficients,
        })),
        Format::Text => {
            let values: Vec<String> = coefficients.iter().map(f64::to_string).collect();
            format!("{}\n{}\n", labels.join(","), values.join(","))
        }
    })
}

fn run_netpath(common: &Common) -> netpath::Result<String> {
    let (_, analysis) = analyze_pair(common)?;
    if let Some(path) = &common.heatmap {
        write_heatmap(path, &analysis)?;
    }
    let matrix = analysis
        .netpath
        .as_ref()
        .ok_or(Error::InsufficientPaths(analysis.report.n_independent))?;
    Ok(match common.format {
        Format::Json => serde_json_pretty(matrix),
        Format::Text => render_netpath_csv(matrix)?,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Analyze { common, all } => (common, run_analyze(common, *all)),
        Command::Paths { common } => (common, run_paths(common)),
        Command::Flow { common } => (common, run_flow(common)),
        Command::Hatmatrix { common } => (common, run_hatmatrix(common)),
        Command::Netpath { common } => (common, run_netpath(common)),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            if common.format == Format::Json {
                println!("{}", error_json(&err));
            }
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
