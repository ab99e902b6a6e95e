use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use gerbe_core::cocycle::{
    check_cocycle, dd_class, model_rep_closed_form, model_rep_cocycle, CocycleRegistry, CocycleTensor, ModelRepCocycle,
    ModelRepParams, SourceParams, DD_TOLERANCE,
};
use gerbe_core::dirac::{
    self, berry_curvature_numeric, conditional_trace_cocycle, linear_path, monopole_curvature, monopole_flux,
    renormalized_curvature, sphere_chern, spectral_flow_1d, BandFieldRegistry, FieldParams, PartialSumSeries,
    SphereMesh,
};
use gerbe_core::exform::{
    circle_bundle_character, circle_bundle_character_numeric, circle_frame, dd_three_form, gcd_realizability,
    torus_frame, IndexNormalization,
};
use gerbe_core::fock::{check_covariance, extract_fock_cocycle, CutoffConfig, FockCocycle, FockError, TwistParams};
use gerbe_core::liegerbe::orbit_integral;
use gerbe_core::verify::{Check, CriterionRegistry, Profile};
use serde_json::{json, Value};

use crate::report::{write_text, CliError, Mesh, Report};
use crate::{Cli, CocycleCmd, Command, DiracCmd, FockCmd, FormsCmd, Global, LieCmd, SourceArgs};

pub fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let (report, extra_meta) = dispatch(cli)?;
    let text = report.to_json();
    match &cli.global.out {
        Some(path) => {
            write_text(path, &text)?;
            let mut meta = json!({ "elapsed_seconds": start.elapsed().as_secs_f64() });
            if let Some(extra) = extra_meta {
                meta["criteria_seconds"] = extra;
            }
            let meta_path = PathBuf::from(format!("{}.meta.json", path.display()));
            write_text(&meta_path, &serde_json::to_string_pretty(&meta).expect("meta serializes"))?;
        }
        None => print!("{text}"),
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn dispatch(cli: &Cli) -> Result<(Report, Option<Value>), CliError> {
    let g = &cli.global;
    let report = match &cli.command {
        Command::Cocycle(c) => cocycle(c, g)?,
        Command::Fock(FockCmd::Extension { alpha, beta, a }) => fock_extension(*alpha, *beta, *a, g)?,
        Command::Dirac(d) => dirac(d, g)?,
        Command::Forms(f) => forms(f)?,
        Command::Lie(LieCmd::OrbitIntegral { level }) => lie(*level, g)?,
        Command::VerifyAll { quick, only } => return verify_all(*quick, only, g),
    };
    Ok((report, None))
}

fn source_params(args: &SourceArgs, g: &Global) -> Result<SourceParams, CliError> {
    let tensor = match &args.tensor {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Some(CocycleTensor::from_json(&text)?)
        }
        None => None,
    };
    Ok(SourceParams {
        tensor,
        alpha: args.alpha,
        beta: args.beta,
        p: args.p,
        q: args.q,
        scale: args.scale,
        seed: g.seed,
        cutoff: g.cutoff,
        margin: g.margin,
    })
}

fn source_name(args: &SourceArgs) -> String {
    args.source.clone().unwrap_or_else(|| if args.tensor.is_some() { "tensor" } else { "levi-civita" }.to_string())
}

fn source_config(args: &SourceArgs, params: &SourceParams) -> Value {
    json!({
        "source": source_name(args),
        "tensor": params.tensor.as_ref().map(|t| t.entries()),
        "alpha": params.alpha,
        "beta": params.beta,
        "p": params.p,
        "q": params.q,
        "scale": params.scale,
        "seed": params.seed,
        "cutoff": params.cutoff,
        "margin": params.margin,
    })
}

fn cocycle(cmd: &CocycleCmd, g: &Global) -> Result<Report, CliError> {
    let registry = CocycleRegistry::standard();
    match cmd {
        CocycleCmd::Classify(args) => {
            let params = source_params(args, g)?;
            let c = registry.build(&source_name(args), &params)?;
            let dd = dd_class(c.as_ref())?;
            let mut r = Report::new("cocycle classify", source_config(args, &params));
            r.checks.push(Check::new(
                "δ log C integral",
                dd.max_integrality_error < DD_TOLERANCE,
                json!(dd.max_integrality_error),
                json!(0.0),
                Some(DD_TOLERANCE),
            ));
            r.checks.push(Check::new(
                "δ log C independent of a",
                dd.max_sample_spread < DD_TOLERANCE,
                json!(dd.max_sample_spread),
                json!(0.0),
                Some(DD_TOLERANCE),
            ));
            r.results = json!({ "cocycle": c.name(), "dd_class": dd });
            Ok(r)
        }
        CocycleCmd::Check { source, trials } => {
            let params = source_params(source, g)?;
            let c = registry.build(&source_name(source), &params)?;
            let check = check_cocycle(c.as_ref(), *trials, g.seed)?;
            let mut config = source_config(source, &params);
            config["trials"] = json!(trials);
            let mut r = Report::new("cocycle check", config);
            r.checks.push(Check::new(
                "cocycle identity",
                check.holds,
                json!(check.max_deviation),
                json!(0.0),
                Some(check.tolerance),
            ));
            r.results = json!({ "cocycle": c.name(), "check": check });
            Ok(r)
        }
        CocycleCmd::ModelRep { p, q, a } => {
            let mut params = ModelRepParams::new(*p, *q);
            params.seed = g.seed;
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for n in unit_shifts() {
                for m in unit_shifts() {
                    match model_rep_cocycle(&params, *a, n, m) {
                        Ok(v) => {
                            let closed = model_rep_closed_form(&params, *a, n, m);
                            worst = worst.max((v - closed).norm());
                            rows.push(json!({ "n": n, "m": m, "phase": v.arg() / (2.0 * PI) }));
                        }
                        Err(gerbe_core::cocycle::CocycleError::Truncation(_)) => {
                            rows.push(json!({ "n": n, "m": m, "phase": null }))
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            }
            let dd = dd_class(&ModelRepCocycle { params })?;
            let mut r = Report::new("cocycle model-rep", json!({ "p": p, "q": q, "a": a, "seed": g.seed, "n_max": params.n_max }));
            r.checks.push(Check::new(
                "ratio matches exp(−2πi (q·n) a∧p∧m)",
                worst < 1e-10,
                json!(worst),
                json!(0.0),
                Some(1e-10),
            ));
            r.results = json!({ "phases": rows, "dd_class": dd });
            Ok(r)
        }
    }
}

fn unit_shifts() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for x in -1..=1 {
        for y in -1..=1 {
            for z in -1..=1 {
                out.push([x, y, z]);
            }
        }
    }
    out
}

fn fock_extension(alpha: [i64; 3], beta: [i64; 3], a: [f64; 3], g: &Global) -> Result<Report, CliError> {
    let cutoff = CutoffConfig::new(
        g.cutoff.unwrap_or(gerbe_core::fock::DEFAULT_CUTOFF),
        g.margin.unwrap_or(gerbe_core::fock::DEFAULT_MARGIN),
    )?;
    let mut rows = Vec::new();
    for n in unit_shifts() {
        for m in unit_shifts() {
            let phase = match extract_fock_cocycle(alpha, beta, &cutoff, a, n, m) {
                Ok(v) => json!(v.arg() / (2.0 * PI)),
                Err(FockError::Margin { .. } | FockError::TooFewStates(_)) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            rows.push(json!({ "n": n, "m": m, "phase": phase }));
        }
    }
    let c = FockCocycle::new(alpha, beta, cutoff);
    let dd = dd_class(&c)?;
    let check = check_cocycle(&c, 20, g.seed)?;
    let params = TwistParams { alpha, beta, a };
    let mut covariance = Vec::new();
    let mut worst: f64 = 0.0;
    for d in 0..3 {
        for s in [1, -1] {
            let mut n = [0; 3];
            n[d] = s;
            let dev = check_covariance(a, n, &params, &cutoff)?;
            worst = worst.max(dev);
            covariance.push(json!({ "n": n, "deviation": dev }));
        }
    }
    let mut r = Report::new(
        "fock extension",
        json!({ "alpha": alpha, "beta": beta, "a": a, "cutoff": cutoff.cutoff, "margin": cutoff.margin, "seed": g.seed }),
    );
    r.checks.push(Check::new("cocycle identity", check.holds, json!(check.max_deviation), json!(0.0), Some(check.tolerance)));
    r.checks.push(Check::new("covariance", worst < 1e-10, json!(worst), json!(0.0), Some(1e-10)));
    r.results = json!({ "phases": rows, "dd_class": dd, "covariance": covariance });
    Ok(r)
}

fn mesh_or(g: &Global, default: (usize, usize)) -> Mesh {
    g.mesh.unwrap_or(Mesh(default.0, default.1))
}

fn dirac(cmd: &DiracCmd, g: &Global) -> Result<Report, CliError> {
    match cmd {
        DiracCmd::SpectralFlow { from, to, steps, level } => {
            let flow = spectral_flow_1d(&linear_path(*from, *to, *steps), *level);
            let mut r = Report::new("dirac spectral-flow", json!({ "from": from, "to": to, "steps": steps, "level": level }));
            r.results = json!({ "flow": flow });
            Ok(r)
        }
        DiracCmd::CondTrace { n, m } => {
            let cutoff = g.cutoff.unwrap_or(50);
            let v = conditional_trace_cocycle(*n, *m, cutoff)?;
            let mut r = Report::new("dirac cond-trace", json!({ "n": n, "m": m, "cutoff": cutoff }));
            r.results = json!({ "value": v.to_string() });
            Ok(r)
        }
        DiracCmd::Monopole { b, delta, radius } => {
            let num = berry_curvature_numeric(*b, *delta)?.vector();
            let exact = monopole_curvature(*b)?.vector();
            let diff: f64 = (0..3).map(|d| (num[d] - exact[d]).norm_sqr()).sum::<f64>().sqrt();
            let size: f64 = (0..3).map(|d| exact[d].norm_sqr()).sum::<f64>().sqrt();
            let Mesh(nt, np) = mesh_or(g, (24, 48));
            let flux = monopole_flux(&[[0, 0, 0]], [0.0; 3], *radius, nt, np)?;
            let mut r = Report::new(
                "dirac monopole",
                json!({ "b": b, "delta": delta, "radius": radius, "mesh": [nt, np] }),
            );
            r.checks.push(Check::new("relative error of numeric curvature", diff / size < 1e-6, json!(diff / size), json!(0.0), Some(1e-6)));
            let flux_err = flux.re.hypot(flux.im - 2.0 * PI);
            r.checks.push(Check::new("flux through sphere around the node", flux_err < 1e-6, json!([flux.re, flux.im]), json!([0.0, 2.0 * PI]), Some(1e-6)));
            r.results = json!({ "numeric": num.map(|c| [c.re, c.im]), "closed_form": exact.map(|c| [c.re, c.im]), "flux": [flux.re, flux.im] });
            Ok(r)
        }
        DiracCmd::SphereChern { field, center, radius, momentum, lattice_radius } => {
            let registry = BandFieldRegistry::standard();
            let f = registry.build(field, &FieldParams { momentum: *momentum, radius: *lattice_radius })?;
            let Mesh(nt, np) = mesh_or(g, (24, 48));
            let mesh = SphereMesh::new(*center, *radius, nt, np)?;
            let coarse = sphere_chern(&mesh, f.as_ref())?;
            let fine = sphere_chern(&mesh.refined(), f.as_ref())?;
            let mut r = Report::new(
                "dirac sphere-chern",
                json!({ "field": field, "center": center, "radius": radius, "momentum": momentum, "lattice_radius": lattice_radius, "mesh": [nt, np] }),
            );
            r.checks.push(Check::new("mesh refinement agrees", coarse == fine, json!(fine), json!(coarse), None));
            r.results = json!({ "field": f.name(), "chern": coarse, "chern_refined": fine });
            Ok(r)
        }
        DiracCmd::RenormSum { a, cutoffs, component, csv } => {
            let cutoffs: Vec<i64> = cutoffs
                .split(',')
                .map(|s| s.trim().parse::<i64>().map_err(|e| CliError::Schema(format!("cutoff `{s}`: {e}"))))
                .collect::<Result<_, _>>()?;
            let comp = parse_component(component)?;
            let series = renormalized_curvature(*a, &cutoffs, comp)?;
            if let Some(path) = csv {
                write_text(path, &series.to_csv())?;
            }
            let renorm = PartialSumSeries::increments(&series.renormalized);
            let bare = PartialSumSeries::increments(&series.bare);
            let mut r = Report::new("dirac renorm-sum", json!({ "a": a, "cutoffs": cutoffs, "component": component }));
            r.results = json!({
                "series": series,
                "renormalized_increments": renorm,
                "bare_increments": bare,
                "renormalized_cauchy": dirac::is_cauchy(&renorm),
                "bare_cauchy": dirac::is_cauchy(&bare),
            });
            Ok(r)
        }
    }
}

fn parse_component(s: &str) -> Result<(usize, usize), CliError> {
    let digits: Vec<usize> = s.chars().filter_map(|c| c.to_digit(10).map(|d| d as usize)).collect();
    match digits.as_slice() {
        [j, k] => Ok((*j, *k)),
        _ => Err(CliError::Schema(format!("component `{s}` must name two directions, e.g. 12"))),
    }
}

fn forms(cmd: &FormsCmd) -> Result<Report, CliError> {
    match cmd {
        FormsCmd::DdClass { normalization } => {
            let norm = match normalization.as_str() {
                "index-form" => IndexNormalization::IndexForm,
                "bare" => IndexNormalization::Bare,
                other => return Err(CliError::Schema(format!("unknown normalization `{other}`"))),
            };
            let frame = torus_frame();
            let form = dd_three_form(&frame, norm)?;
            let coeff = form.rational_coefficient(&["da1", "da2", "da3"])?;
            let mut r = Report::new("forms dd-class", json!({ "normalization": normalization }));
            r.results = json!({
                "form": form.to_string(),
                "coefficient": coeff.map(|(c, k)| json!({ "value": c.to_string(), "unit_power": k })),
            });
            Ok(r)
        }
        FormsCmd::Chern1d { alpha, beta } => {
            let form = match (alpha, beta) {
                (Some(a), Some(b)) => circle_bundle_character_numeric(*a, *b)?,
                (None, None) => circle_bundle_character(&circle_frame())?,
                _ => return Err(CliError::Schema("give both --alpha and --beta, or neither".into())),
            };
            let mut r = Report::new("forms chern-1d", json!({ "alpha": alpha, "beta": beta }));
            r.results = json!({ "form": form.to_string() });
            Ok(r)
        }
        FormsCmd::GcdCheck { f } => {
            let res = gcd_realizability(*f);
            let mut r = Report::new("forms gcd-check", json!({ "f": f }));
            if let Some(w) = res.witness {
                let pairing = w[0] * f[0] + w[1] * f[1] + w[2] * f[2];
                r.checks.push(Check::new("witness pairs to 1", pairing == 1, json!(pairing), json!(1), None));
            }
            r.results = json!(res);
            Ok(r)
        }
    }
}

fn lie(level: i64, g: &Global) -> Result<Report, CliError> {
    let Mesh(nt, np) = mesh_or(g, (200, 400));
    let integral = orbit_integral(level, nt, np)?;
    let expected = 2.0 * level as f64;
    let rel = if level == 0 { integral.abs() } else { (integral - expected).abs() / expected.abs() };
    let mut r = Report::new("lie orbit-integral", json!({ "level": level, "mesh": [nt, np] }));
    r.checks.push(Check::new("orbit integral = 2k", rel < 1e-3, json!(integral), json!(expected), Some(1e-3)));
    r.results = json!({ "level": level, "mesh": [nt, np], "integral": integral, "expected": expected, "rel_error": rel });
    Ok(r)
}

fn verify_all(quick: bool, only: &[String], g: &Global) -> Result<(Report, Option<Value>), CliError> {
    let registry = CriterionRegistry::standard();
    let profile = if quick { Profile::quick(g.seed) } else { Profile::full(g.seed) };
    let selected: Vec<_> = if only.is_empty() {
        registry.all().collect()
    } else {
        only.iter().map(|k| registry.get(k)).collect::<Result<_, _>>()?
    };
    let mut r = Report::new("verify-all", json!({ "quick": quick, "seed": g.seed, "only": only }));
    let mut details = Vec::new();
    let mut timings = serde_json::Map::new();
    for c in selected {
        let rep = c.run(&profile);
        eprintln!("{} criterion {} {}", if rep.pass { "PASS" } else { "FAIL" }, rep.id, rep.name);
        timings.insert(rep.name.clone(), json!(rep.elapsed.as_secs_f64()));
        r.checks.push(Check::new(
            format!("criterion {} {}", rep.id, rep.name),
            rep.pass,
            json!(rep.checks.iter().filter(|c| c.pass).count()),
            json!(rep.checks.len()),
            None,
        ));
        details.push(rep);
    }
    r.results = json!({ "criteria": details });
    Ok((r, Some(Value::Object(timings))))
}
