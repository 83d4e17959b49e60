use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use opalite::band::slice_bands;
use opalite::emissivity::{angular_map, main_stop_band, planck_weight, Channel, EmissivityMap};
use opalite::mie::{mie_cross_sections, SphereScatterer};
use opalite::output;
use opalite::scene::{parse_config, preset, Scene, Units, PRESETS};
use opalite::stack::incident_kpar;
use opalite::validate::validate_scene;
use opalite::{Error, Result};

#[derive(Parser)]
#[command(
    name = "opalite",
    version,
    about = "Reflectance, transmittance and emissivity of photonic crystal films"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scene file
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scene: paper-fig2, paper-fig3 or paper-fig4
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the multipole order
    #[arg(long, global = true)]
    lmax: Option<usize>,
    /// Override the beam cutoff |k_par + g|
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    /// Frequency convention of the sweep grid and the output
    #[arg(long, global = true, value_enum)]
    units: Option<UnitsArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsArg {
    Angular,
    Ordinary,
}

#[derive(Subcommand)]
enum Command {
    /// R, T, A, E spectra at each sweep angle
    Spectrum,
    /// Emissivity map over frequency and angle
    Sweep,
    /// Complex band structure of the repeated slice and film transmittance
    Band,
    /// Single-sphere efficiencies
    Mie,
    /// Run the invariant checks (all presets when no scene is given)
    Validate,
}

fn load(cli: &Cli) -> Result<Option<(String, Scene)>> {
    let (name, mut scene) = match (&cli.config, &cli.preset) {
        (Some(p), _) => {
            let text = fs::read_to_string(p)?;
            let name = p
                .file_stem()
                .map_or("scene".into(), |s| s.to_string_lossy().into_owned());
            (name, parse_config(&text)?)
        }
        (None, Some(n)) => (n.clone(), preset(n)?),
        (None, None) => return Ok(None),
    };
    if let Some(l) = cli.lmax {
        scene.numerics.lmax = l;
    }
    if let Some(c) = cli.cutoff {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff {c} must be > 0")));
        }
        scene.numerics.cutoff = Some(c);
    }
    if let Some(u) = cli.units {
        // the grid keeps its numbers; only their meaning changes
        scene.sweep.units = match u {
            UnitsArg::Angular => Units::Angular,
            UnitsArg::Ordinary => Units::Ordinary,
        };
    }
    scene.controls().validate()?;
    Ok(Some((name, scene)))
}

fn write(dir: &Path, file: &str, text: &str) -> Result<()> {
    let p = dir.join(file);
    fs::write(&p, text)?;
    println!("wrote {}", p.display());
    Ok(())
}

fn compute_map(scene: &Scene) -> Result<EmissivityMap> {
    angular_map(
        &scene.description()?,
        &scene.omega_grid(),
        &scene.theta_grid(),
        &scene.controls(),
        scene.numerics.engine,
    )
}

fn report_gaps(map: &EmissivityMap, scene: &Scene) {
    let u = scene.sweep.units;
    for (j, th) in map.theta.iter().enumerate() {
        let mut line = format!("theta {:>5.1} deg:", th.to_degrees());
        for ch in Channel::ALL {
            match main_stop_band(&map.omega, &map.spectrum(ch, j), scene.sweep.threshold) {
                Some(b) => {
                    line += &format!(
                        "  {} gap {:.4}..{:.4} (centre {:.4})",
                        ch.name(),
                        u.from_angular(b.lo),
                        u.from_angular(b.hi),
                        u.from_angular(b.center())
                    )
                }
                None => line += &format!("  {} no gap", ch.name()),
            }
        }
        println!("{line}");
    }
}

fn planck_output(map: &EmissivityMap, scene: &Scene, dir: &Path, stem: &str) -> Result<()> {
    let Some(x0) = scene.sweep.planck_x0 else {
        return Ok(());
    };
    let mut rows = Vec::new();
    let mut coverage = 1.0f64;
    for j in 0..map.theta.len() {
        for ch in Channel::ALL {
            let w = planck_weight(&map.omega, &map.spectrum(ch, j), x0)?;
            coverage = coverage.min(w.coverage);
            rows.extend(w.omega.iter().zip(&w.power).map(|(o, p)| (*o, map.theta[j], ch, *p)));
        }
    }
    if coverage < opalite::emissivity::MIN_PLANCK_COVERAGE {
        eprintln!(
            "warning: the frequency grid covers only {:.1}% of the Planck spectrum",
            100.0 * coverage
        );
    }
    write(
        dir,
        &format!("{stem}_planck.csv"),
        &output::planck_csv(&rows, scene.sweep.units, x0, coverage)?,
    )
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    let loaded = load(cli)?;
    if !matches!(cli.command, Command::Validate) && loaded.is_none() {
        return Err(Error::InvalidArgument("give --config FILE or --preset NAME".into()));
    }
    fs::create_dir_all(&cli.out)?;
    let dir = cli.out.as_path();
    match &cli.command {
        Command::Spectrum => {
            let (name, scene) = loaded.unwrap();
            let map = compute_map(&scene)?;
            let u = scene.sweep.units;
            write(dir, &format!("{name}_spectrum.csv"), &output::map_csv(&map, u)?)?;
            for ch in Channel::ALL {
                let svg = output::spectrum_svg(&map, ch, u, &format!("{name}: emissivity ({})", ch.name()));
                write(dir, &format!("{name}_spectrum_{}.svg", ch.name()), &svg)?;
            }
            planck_output(&map, &scene, dir, &name)?;
            report_gaps(&map, &scene);
        }
        Command::Sweep => {
            let (name, scene) = loaded.unwrap();
            let map = compute_map(&scene)?;
            let u = scene.sweep.units;
            write(dir, &format!("{name}_sweep.csv"), &output::map_csv(&map, u)?)?;
            for ch in Channel::ALL {
                let svg = output::map_svg(&map, ch, u, &format!("{name}: emissivity ({})", ch.name()));
                write(dir, &format!("{name}_sweep_{}.svg", ch.name()), &svg)?;
            }
            planck_output(&map, &scene, dir, &name)?;
            report_gaps(&map, &scene);
        }
        Command::Band => {
            let (name, scene) = loaded.unwrap();
            let (els, host, period) = scene.unit_description()?;
            let controls = scene.controls();
            let desc = scene.description()?;
            let theta = scene.theta_grid()[0];
            let omegas = scene.omega_grid();
            use rayon::prelude::*;
            let bands = omegas
                .par_iter()
                .map(|&w| {
                    let kpar = incident_kpar(&desc.incident, w, theta, 0.0)?;
                    slice_bands(&els, host, period, w, kpar, &controls).map_err(|e| e.at(w, theta))
                })
                .collect::<Vec<Result<_>>>()
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let map = angular_map(&desc, &omegas, &[theta], &controls, scene.numerics.engine)?;
            let trans: Vec<(f64, f64)> = (0..omegas.len())
                .map(|i| {
                    let [s, p] = map.point(i, 0);
                    (omegas[i], 0.5 * (s.t + p.t))
                })
                .collect();
            let u = scene.sweep.units;
            write(dir, &format!("{name}_band.csv"), &output::band_csv(&bands, u)?)?;
            write(dir, &format!("{name}_transmission.csv"), &output::map_csv(&map, u)?)?;
            write(
                dir,
                &format!("{name}_band.svg"),
                &output::band_svg(&bands, &trans, u, &name),
            )?;
            let mut open = None;
            for b in &bands {
                match (b.has_propagating(), open) {
                    (false, None) => open = Some(b.omega),
                    (true, Some(lo)) => {
                        println!("band gap {:.4}..{:.4}", u.from_angular(lo), u.from_angular(b.omega));
                        open = None;
                    }
                    _ => {}
                }
            }
        }
        Command::Mie => {
            let (name, scene) = loaded.unwrap();
            let lat = scene
                .lattice
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("the scene has no spheres".into()))?;
            let (_, host, _) = scene.unit_description()?;
            let sphere = SphereScatterer::new(lat.radius, scene.material(&lat.sphere)?, host)?;
            let rows = scene
                .omega_grid()
                .into_iter()
                .map(|w| mie_cross_sections(&sphere, w).map(|c| (w, c)))
                .collect::<Result<Vec<_>>>()?;
            if !host.is_lossless() {
                eprintln!("note: efficiencies are not defined in an absorbing host");
            }
            write(
                dir,
                &format!("{name}_mie.csv"),
                &output::mie_csv(&rows, scene.sweep.units)?,
            )?;
        }
        Command::Validate => {
            let scenes = match loaded {
                Some(s) => vec![s],
                None => PRESETS
                    .iter()
                    .map(|n| preset(n).map(|s| (n.to_string(), s)))
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut ok = true;
            for (name, scene) in &scenes {
                println!("{name}");
                for c in validate_scene(scene)? {
                    let status = if c.passed() { "PASS" } else { "FAIL" };
                    ok &= c.passed();
                    println!(
                        "  {status}  {:<66} residual {:.3e} (limit {:.0e})",
                        c.name, c.residual, c.threshold
                    );
                }
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
