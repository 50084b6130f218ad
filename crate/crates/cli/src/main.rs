//! `eltract`: command-line access to tract geometry, escape classification,
//! ray landing, periodic points and Siegel-disk renders.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for numerical or
//! I/O failures.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use eltract::logdyn::{self, TractGeometry};
use eltract::maps::{format_real, golden_mean, parse_complex, rotation, EntireMap, Family};
use eltract::orbit::{self, DomainSet};
use eltract::periodic::{self, SearchBox};
use eltract::rays::{self, ExternalAddress, LandingStatus};
use eltract::render::{self, EscapeRule, Viewport};
use eltract::{Error, Exec};

#[derive(Parser, Debug)]
#[command(name = "eltract", version, about = "Numerics for entire maps with bounded singular set")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Audit the expansion estimate for the logarithmic lift.
    VerifyExpansion {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Search for the radius above which r doubles in one domain.
    FindCf {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        domain: i64,
        #[arg(long, default_value_t = 200.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Classify orbits as escaping, leaving the allowed domains, or undecided.
    ClassifyOrbit {
        #[command(flatten)]
        map: MapArgs,
        /// Starting point `re,im`; repeatable.
        #[arg(long = "point", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
        /// Allowed domains, `all` or a list like `0,1`.
        #[arg(long, default_value = "all", allow_hyphen_values = true)]
        domains: String,
        /// Escape radius R; defaults to K + 1.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = orbit::DEFAULT_NMAX)]
        nmax: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimate the radius beyond which orbits in the allowed domains escape.
    EstimateRprime {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        domains: String,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 50)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample a dynamic ray.
    TraceRay {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        address: String,
        #[arg(long, default_value_t = 1.0)]
        t_start: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Follow a periodic ray to its landing point.
    LandRay {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        address: String,
        #[arg(long, default_value_t = rays::DEFAULT_MAX_PULLBACKS)]
        max_pullbacks: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Find and classify periodic points in a box.
    FixedPoints {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1)]
        period: usize,
        /// Search box `re_min,re_max,im_min,im_max`.
        #[arg(long = "box", default_value = "-3,3,-3,3", allow_hyphen_values = true)]
        search: String,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Render escaping versus non-escaping pixels to a PPM file.
    Render {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Render, then mark the singular orbits in black.
    Overlay {
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        image: ImageArgs,
        /// Number of orbit points per singular value.
        #[arg(long, default_value_t = 10_000)]
        orbit: usize,
    },
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long)]
    family: String,
    /// Complex parameter `re,im`, or `golden` / `rot:θ` for `e^{2πiθ}`;
    /// repeat for cosine (`a` then `b`).
    #[arg(long = "param", allow_hyphen_values = true)]
    params: Vec<String>,
    /// Run batch work on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ImageArgs {
    /// `cx,cy,width`.
    #[arg(long, default_value = "0,0,8", allow_hyphen_values = true)]
    viewport: String,
    #[arg(long, default_value_t = 400)]
    pixels: usize,
    #[arg(long, default_value_t = 10_000)]
    nmax: usize,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::Io(_)) {
            Failure::Runtime(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn parse_param(s: &str) -> eltract::Result<Complex64> {
    if s.eq_ignore_ascii_case("golden") {
        return Ok(rotation(golden_mean()));
    }
    if let Some(theta) = s.strip_prefix("rot:") {
        let theta: f64 = theta.trim().parse().map_err(|_| Error::Parse(format!("bad rotation number '{theta}'")))?;
        return Ok(rotation(theta));
    }
    parse_complex(s)
}

impl MapArgs {
    fn geometry(&self) -> CliResult<TractGeometry> {
        let family: Family = self.family.parse()?;
        let params = self.params.iter().map(|p| parse_param(p)).collect::<eltract::Result<Vec<_>>>()?;
        Ok(TractGeometry::new(EntireMap::from_params(family, &params)?)?)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

impl OutArgs {
    fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn parse_list(s: &str, n: usize, what: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("bad {what} '{s}'")))?;
    if v.len() != n {
        return Err(Failure::Usage(format!("{what} needs {n} comma-separated numbers, got '{s}'")));
    }
    Ok(v)
}

fn radius_or_default(geom: &TractGeometry, radius: Option<f64>) -> f64 {
    radius.unwrap_or(geom.k() + 1.0)
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::VerifyExpansion { map, samples, seed, out } => {
            let geom = map.geometry()?;
            let rep = geom.verify_expansion(samples, seed, map.exec());
            let mut w = out.writer()?;
            writeln!(w, "{}", logdyn::EXPANSION_CSV_HEADER)?;
            writeln!(w, "{}", logdyn::expansion_csv_row(geom.map(), &rep))?;
            w.flush()?;
        }
        Command::FindCf { map, domain, r_max, seed, out } => {
            let geom = map.geometry()?;
            let c = geom.find_cf(domain, r_max, seed, map.exec())?;
            let mut w = out.writer()?;
            writeln!(w, "{}", logdyn::CF_CSV_HEADER)?;
            writeln!(w, "{}", logdyn::cf_csv_row(geom.map(), domain, c))?;
            w.flush()?;
        }
        Command::ClassifyOrbit { map, points, domains, radius, nmax, out } => {
            let geom = map.geometry()?;
            let allowed: DomainSet = domains.parse()?;
            let zs = points.iter().map(|p| parse_complex(p)).collect::<eltract::Result<Vec<_>>>()?;
            let recs = orbit::classify_batch(&geom, &allowed, radius_or_default(&geom, radius), &zs, nmax, map.exec())?;
            let mut w = out.writer()?;
            writeln!(w, "{}", orbit::ORBIT_CSV_HEADER)?;
            for (z, rec) in zs.iter().zip(&recs) {
                writeln!(w, "{}", orbit::orbit_csv_row(*z, rec))?;
            }
            w.flush()?;
        }
        Command::EstimateRprime { map, domains, radius, probes, seed, out } => {
            let geom = map.geometry()?;
            let allowed: DomainSet = domains.parse()?;
            let r = radius_or_default(&geom, radius);
            let rp = orbit::estimate_rprime(&geom, &allowed, r, probes, seed, map.exec())?;
            let mut w = out.writer()?;
            writeln!(w, "family,domains,R,probes,R_prime")?;
            writeln!(
                w,
                "{},{},{},{},{}",
                geom.map().family(),
                allowed.to_string().replace(',', ";"),
                format_real(r),
                probes,
                format_real(rp)
            )?;
            w.flush()?;
        }
        Command::TraceRay { map, address, t_start, t_end, samples, out } => {
            let geom = map.geometry()?;
            let addr: ExternalAddress = address.parse()?;
            let ray = rays::trace_ray(&geom, &addr, t_start, t_end, samples)?;
            let mut w = out.writer()?;
            writeln!(w, "{}", rays::RAY_CSV_HEADER)?;
            for s in &ray {
                writeln!(w, "{}", rays::ray_csv_row(&geom, s))?;
            }
            w.flush()?;
        }
        Command::LandRay { map, address, max_pullbacks, out } => {
            let geom = map.geometry()?;
            let addr: ExternalAddress = address.parse()?;
            let res = rays::land_ray(&geom, &addr, max_pullbacks)?;
            let mut w = out.writer()?;
            writeln!(w, "{}", res.record())?;
            w.flush()?;
            if let LandingStatus::NoConvergence { pullbacks, .. } = res.status {
                return Err(Failure::Runtime(format!("ray {addr} did not converge after {pullbacks} pullbacks")));
            }
        }
        Command::FixedPoints { map, period, search, grid, out } => {
            let geom = map.geometry()?;
            let b = parse_list(&search, 4, "box")?;
            let search = SearchBox { re: (b[0], b[1]), im: (b[2], b[3]) };
            let pts = periodic::find_fixed_points(geom.map(), period, search, grid, map.exec())?;
            let mut w = out.writer()?;
            writeln!(w, "{}", periodic::FIXED_POINT_CSV_HEADER)?;
            for p in &pts {
                writeln!(w, "{}", periodic::fixed_point_csv_row(p))?;
            }
            w.flush()?;
        }
        Command::Render { map, image } => {
            let geom = map.geometry()?;
            let img = draw(&geom, &image, map.exec())?;
            render::write_ppm(&img, &image.out)?;
        }
        Command::Overlay { map, image, orbit } => {
            let geom = map.geometry()?;
            if orbit == 0 {
                return Err(Failure::Usage("--orbit must be at least 1".into()));
            }
            let img = render::overlay_singular_orbit(&geom, draw(&geom, &image, map.exec())?, orbit);
            render::write_ppm(&img, &image.out)?;
        }
    }
    Ok(())
}

fn draw(geom: &TractGeometry, image: &ImageArgs, exec: Exec) -> CliResult<render::ClassifiedImage> {
    let v = parse_list(&image.viewport, 3, "viewport")?;
    if image.nmax == 0 {
        return Err(Failure::Usage("--nmax must be at least 1".into()));
    }
    let vp = Viewport::square(Complex64::new(v[0], v[1]), v[2], image.pixels)?;
    let rule = EscapeRule { radius: image.radius, ..EscapeRule::default() };
    Ok(render::render(geom, vp, image.nmax, &rule, exec))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
