use serde_json::{json, Map, Value};

use gelfand::catalog;
use gelfand::group::GroupKind;
use gelfand::invariant::{max_abs, GelfandPair, PairSpec, SpecDefaults, SpecialAssumption};
use gelfand::poly::{rat, rational_to_f64, GaussianRational, MultiIndex, Polynomial, Rational};
use gelfand::spherical::{
    build_h_series, eval_h_series, eval_spherical_direct, special_case_a_exact, verify_eigenfunction,
    verify_symmetry, CoefficientTable, EigenPoint,
};
use gelfand::transform::{
    ball_points, truncation_warning, verify_schwarz, BoxQuadrature, HOptions, InvariantFunction,
};

use crate::output::{csv_bytes, json_bytes, sha256_hex, InputRecord, Sink};
use crate::{CliError, Format, Params, Source, Suite, Table};

pub const DEFAULT_MAX_DEGREE: u32 = 30;
pub const DEFAULT_QUAD_RADIUS: f64 = 1.5;
pub const DEFAULT_QUAD_NODES: usize = 64;

struct Loaded {
    pair: GelfandPair,
    spec: PairSpec,
    label: String,
    digest: String,
}

fn load(source: &Source) -> Result<Loaded, CliError> {
    if let Some(path) = &source.spec {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| gelfand::Error::Parse("spec file is not UTF-8".into()))?;
        let spec = PairSpec::from_json_str(&text)?;
        let pair = spec.validate()?;
        Ok(Loaded {
            pair,
            spec,
            label: path.display().to_string(),
            digest: sha256_hex(&bytes),
        })
    } else {
        let name = source.builtin.as_deref().unwrap_or_default();
        load_builtin(name)
    }
}

fn load_builtin(name: &str) -> Result<Loaded, CliError> {
    let pair = catalog::builtin(name)?;
    let spec = pair.to_spec();
    let digest = sha256_hex(spec.to_json_pretty().as_bytes());
    Ok(Loaded {
        pair,
        spec,
        label: format!("builtin:{name}"),
        digest,
    })
}

struct Resolved {
    max_degree: u32,
    quad_radius: f64,
    quad_nodes: usize,
    tol: f64,
    defaulted: Vec<String>,
}

fn resolve(params: &Params, defaults: Option<&SpecDefaults>, fallback_tol: f64) -> Resolved {
    let d = defaults.cloned().unwrap_or_default();
    let mut defaulted = Vec::new();
    let mut pick = |name: &str, flag: Option<f64>, spec: Option<f64>, fallback: f64| {
        flag.or(spec).unwrap_or_else(|| {
            defaulted.push(name.to_string());
            fallback
        })
    };
    let max_degree = pick(
        "max_degree",
        params.max_degree.map(f64::from),
        d.max_degree.map(f64::from),
        f64::from(DEFAULT_MAX_DEGREE),
    ) as u32;
    let quad_radius = pick(
        "quad_radius",
        params.quad_radius,
        d.quad_radius,
        DEFAULT_QUAD_RADIUS,
    );
    let quad_nodes = pick(
        "quad_nodes",
        params.quad_nodes.map(|v| v as f64),
        d.quad_nodes.map(|v| v as f64),
        DEFAULT_QUAD_NODES as f64,
    ) as usize;
    let tol = pick("tol", params.tol, d.tol, fallback_tol);
    Resolved {
        max_degree,
        quad_radius,
        quad_nodes,
        tol,
        defaulted,
    }
}

fn keep_defaulted(r: &Resolved, names: &[&str]) -> Vec<String> {
    r.defaulted
        .iter()
        .filter(|d| names.contains(&d.as_str()))
        .cloned()
        .collect()
}

fn inputs(l: &Loaded) -> InputRecord {
    InputRecord {
        source: l.label.clone(),
        spec_sha256: l.digest.clone(),
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn group_summary(pair: &GelfandPair) -> String {
    match pair.group().kind() {
        GroupKind::Finite(e) => format!("finite (order {})", e.len()),
        GroupKind::So2 { quadrature_points } => format!("so2 ({quadrature_points} quadrature points)"),
        GroupKind::So3 { resolution } => format!("so3 (resolution {resolution})"),
    }
}

fn verdict_text(v: &SpecialAssumption) -> String {
    match v {
        SpecialAssumption::Holds { up_to } => format!("holds up to M={up_to}"),
        SpecialAssumption::Fails { j, j_prime, value } => format!(
            "assumption fails, witness J={j}, J'={j_prime}, pairing {}",
            gelfand::poly::format_rational(value)
        ),
    }
}

fn verdict_json(v: &SpecialAssumption) -> Value {
    match v {
        SpecialAssumption::Holds { up_to } => json!({ "holds": true, "up_to": up_to }),
        SpecialAssumption::Fails { j, j_prime, value } => json!({
            "holds": false,
            "J": j.exponents(),
            "J_prime": j_prime.exponents(),
            "pairing": gelfand::poly::format_rational(value),
        }),
    }
}

pub fn pair_check(source: &Source, params: &Params) -> Result<(), CliError> {
    let loaded = load(source)?;
    let r = resolve(params, loaded.spec.defaults.as_ref(), 0.0);
    let pair = &loaded.pair;
    let verdict = pair.check_special_assumption(r.max_degree)?;
    println!("pair: {}", loaded.label);
    println!("n: {}", pair.dimension());
    println!("generators: {}", pair.len());
    println!("degrees: {:?}", pair.degrees());
    println!("group: {}", group_summary(pair));
    println!("special assumption: {}", verdict_text(&verdict));

    let mut sink = Sink::new(params.out.clone())?;
    let summary = json!({
        "pair": loaded.label,
        "n": pair.dimension(),
        "generators": pair.len(),
        "degrees": pair.degrees(),
        "group": pair.group().kind_name(),
        "special_assumption": verdict_json(&verdict),
    });
    sink.emit("pair_check.json", &json_bytes(&summary), false)?;
    sink.finish(
        "pair-check",
        inputs(&loaded),
        object(json!({ "max_degree": r.max_degree })),
        keep_defaulted(&r, &["max_degree"]),
    )
}

fn poly_json(p: &Polynomial<GaussianRational>) -> Value {
    serde_json::to_value(p.to_spec()).expect("polynomial spec serializes")
}

pub fn coeffs(source: &Source, params: &Params, which: Table) -> Result<(), CliError> {
    let loaded = load(source)?;
    let r = resolve(params, loaded.spec.defaults.as_ref(), 0.0);
    let table = CoefficientTable::build(&loaded.pair, r.max_degree)?;
    let mut rows: Vec<(&str, u32, &MultiIndex, Value)> = Vec::new();
    if which != Table::A {
        rows.extend(table.b_entries().map(|(i, q)| ("b", i.degree(), i, poly_json(q))));
    }
    if which != Table::B {
        rows.extend(table.a_entries().map(|(j, m, q)| ("a", m, j, poly_json(q))));
    }
    let (name, bytes) = match params.format {
        Format::Csv => {
            let header = ["kind", "m", "index", "q"].map(String::from).to_vec();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|(k, m, i, q)| vec![k.to_string(), m.to_string(), i.to_string(), q.to_string()])
                .collect();
            ("coeffs.csv", csv_bytes(&header, &body))
        }
        Format::Json => {
            let body: Vec<Value> = rows
                .iter()
                .map(|(k, m, i, q)| json!({ "kind": k, "m": m, "index": i.exponents(), "q": q }))
                .collect();
            let doc = json!({ "pair": loaded.label, "M": r.max_degree, "rows": body });
            ("coeffs.json", json_bytes(&doc))
        }
    };
    let mut sink = Sink::new(params.out.clone())?;
    sink.emit(name, &bytes, true)?;
    if sink.has_dir() {
        println!("{} rows written to {name}", rows.len());
    }
    sink.finish(
        "coeffs",
        inputs(&loaded),
        object(json!({
            "max_degree": r.max_degree,
            "table": format!("{which:?}").to_lowercase(),
            "format": format!("{:?}", params.format).to_lowercase(),
        })),
        keep_defaulted(&r, &["max_degree"]),
    )
}

pub struct VerifyOptions {
    pub suite: Suite,
    pub function: String,
    pub support: f64,
    pub points: usize,
    pub radius: Option<f64>,
    pub seed: u64,
}

/// Output of one suite: JSON report, CSV table, pass flag and a summary line.
struct SuiteResult {
    report: Value,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    pass: bool,
    summary: String,
}

fn coords(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn fmt_f64s(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:e}")).collect()
}

fn rational_points(n: usize, count: usize) -> Vec<Vec<Rational>> {
    (0..count)
        .map(|k| {
            (0..n)
                .map(|i| rat(((3 * k + 2 * i + 1) % 7) as i64 - 3, (k + 2) as i64))
                .collect()
        })
        .collect()
}

fn suite_eigen(pair: &GelfandPair, r: &Resolved) -> Result<SuiteResult, CliError> {
    let table = CoefficientTable::build(pair, r.max_degree)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let mut worst: Option<(usize, Rational)> = None;
    for j in 0..pair.len() {
        let res = verify_eigenfunction(&table, &EigenPoint::Symbolic, j)?;
        let text = gelfand::poly::format_rational(&res);
        results.push(json!({ "generator": j, "residual": text, "residual_f64": rational_to_f64(&res) }));
        rows.push(vec![j.to_string(), text]);
        if worst.as_ref().is_none_or(|(_, w)| res > *w) {
            worst = Some((j, res));
        }
    }
    let (wj, wr) = worst.expect("pair has generators");
    let wf = rational_to_f64(&wr);
    let pass = wf <= r.tol;
    Ok(SuiteResult {
        report: json!({
            "results": results,
            "max_residual": gelfand::poly::format_rational(&wr),
            "worst": { "generator": wj, "residual_f64": wf },
        }),
        header: vec!["generator".into(), "residual".into()],
        rows,
        pass,
        summary: format!("max residual {}", gelfand::poly::format_rational(&wr)),
    })
}

fn suite_symmetry(pair: &GelfandPair, r: &Resolved, o: &VerifyOptions) -> Result<SuiteResult, CliError> {
    let n = pair.dimension();
    let radius = o.radius.unwrap_or(2.0);
    let pts = ball_points(n, radius, 2 * o.points, o.seed);
    let mut rows = Vec::new();
    let mut worst = (0.0f64, Vec::new(), Vec::new());
    for pq in pts.chunks(2) {
        let (xi, x) = (&pq[0], &pq[1]);
        let d = verify_symmetry(pair, xi, x)?;
        if d >= worst.0 {
            worst = (d, xi.clone(), x.clone());
        }
        let mut row = fmt_f64s(xi);
        row.extend(fmt_f64s(x));
        row.push(format!("{d:e}"));
        rows.push(row);
    }
    let mut header = coords("xi", n);
    header.extend(coords("x", n));
    header.push("defect".into());
    Ok(SuiteResult {
        report: json!({
            "points": o.points,
            "radius": radius,
            "seed": o.seed,
            "max_defect": worst.0,
            "worst": { "xi": worst.1, "x": worst.2, "defect": worst.0 },
        }),
        header,
        rows,
        pass: worst.0 <= r.tol,
        summary: format!("max defect {:e}", worst.0),
    })
}

fn gaussian_abs(z: &GaussianRational) -> Rational {
    max_abs([z.re.clone(), z.im.clone()])
}

fn suite_special(pair: &GelfandPair, r: &Resolved) -> Result<SuiteResult, CliError> {
    let verdict = pair.check_special_assumption(r.max_degree)?;
    let header = vec![
        "point".into(),
        "J".into(),
        "series".into(),
        "closed_form".into(),
        "diff".into(),
    ];
    if !verdict.holds() {
        return Ok(SuiteResult {
            report: json!({ "verdict": verdict_json(&verdict), "comparisons": 0 }),
            header,
            rows: Vec::new(),
            pass: true,
            summary: verdict_text(&verdict),
        });
    }
    let table = CoefficientTable::build(pair, r.max_degree)?;
    let mut rows = Vec::new();
    let mut worst: Option<(usize, MultiIndex, Rational)> = None;
    for (k, xi) in rational_points(pair.dimension(), 4).iter().enumerate() {
        for (j, series) in table.h_terms_exact(xi)? {
            let closed = special_case_a_exact(pair, &j, xi)?;
            let diff = gaussian_abs(&(series.clone() - closed.clone()));
            rows.push(vec![
                k.to_string(),
                j.to_string(),
                format_gauss(&series),
                format_gauss(&closed),
                gelfand::poly::format_rational(&diff),
            ]);
            if worst.as_ref().is_none_or(|(_, _, w)| diff > *w) {
                worst = Some((k, j, diff));
            }
        }
    }
    let (wk, wj, wd) = worst.expect("at least the constant term");
    let wf = rational_to_f64(&wd);
    Ok(SuiteResult {
        report: json!({
            "verdict": verdict_json(&verdict),
            "comparisons": rows.len(),
            "max_diff": gelfand::poly::format_rational(&wd),
            "worst": { "point": wk, "J": wj.exponents(), "diff_f64": wf },
        }),
        header,
        rows,
        pass: wf <= r.tol,
        summary: format!(
            "{}; max diff {}",
            verdict_text(&verdict),
            gelfand::poly::format_rational(&wd)
        ),
    })
}

fn format_gauss(z: &GaussianRational) -> String {
    use gelfand::poly::format_rational as f;
    format!("{}+{}i", f(&z.re), f(&z.im))
}

fn suite_schwarz(
    pair: &GelfandPair,
    label: &str,
    r: &Resolved,
    o: &VerifyOptions,
) -> Result<SuiteResult, CliError> {
    let n = pair.dimension();
    let radius = o.radius.unwrap_or(3.0);
    let fhat = InvariantFunction::by_name(&o.function, n, o.support)?;
    let quad = BoxQuadrature::new(n, r.quad_radius, r.quad_nodes)?;
    if let Some(w) = truncation_warning(&fhat, &quad) {
        eprintln!("warning: {w}");
    }
    let table = CoefficientTable::build(pair, r.max_degree)?;
    let mut points = vec![vec![0.0; n]];
    points.extend(ball_points(n, radius, o.points.saturating_sub(1), o.seed));
    let opts = HOptions {
        target_radius: radius,
        tol: r.tol,
        check_nodes: true,
    };
    let report = verify_schwarz(label, &table, &fhat, &quad, &points, &opts)?;
    let worst = report
        .points
        .iter()
        .max_by(|a, b| a.err.total_cmp(&b.err))
        .cloned();
    let mut header = coords("x", n);
    header.extend(["f_re", "f_im", "h_re", "h_im", "err"].map(String::from));
    let rows = report
        .points
        .iter()
        .map(|p| {
            let mut row = fmt_f64s(&p.x);
            row.extend(fmt_f64s(&[p.f[0], p.f[1], p.h_rho[0], p.h_rho[1], p.err]));
            row
        })
        .collect();
    let pass = report.max_abs_error <= r.tol;
    let summary = format!("max_abs_error {:e}", report.max_abs_error);
    let mut value = serde_json::to_value(&report).expect("report serializes");
    if let Value::Object(m) = &mut value {
        m.insert("function".into(), json!(o.function));
        m.insert("support".into(), json!(o.support));
        m.insert("radius".into(), json!(radius));
        m.insert("seed".into(), json!(o.seed));
        m.insert(
            "worst".into(),
            serde_json::to_value(worst).expect("point serializes"),
        );
    }
    Ok(SuiteResult {
        report: value,
        header,
        rows,
        pass,
        summary,
    })
}

pub fn verify(source: &Source, params: &Params, o: &VerifyOptions) -> Result<(), CliError> {
    let loaded = load(source)?;
    let fallback_tol = match o.suite {
        Suite::Eigen | Suite::Special => 0.0,
        Suite::Symmetry => 1e-10,
        Suite::Schwarz => 1e-6,
    };
    let r = resolve(params, loaded.spec.defaults.as_ref(), fallback_tol);
    let suite_name = format!("{:?}", o.suite).to_lowercase();
    let res = match o.suite {
        Suite::Eigen => suite_eigen(&loaded.pair, &r)?,
        Suite::Symmetry => suite_symmetry(&loaded.pair, &r, o)?,
        Suite::Special => suite_special(&loaded.pair, &r)?,
        Suite::Schwarz => suite_schwarz(&loaded.pair, &loaded.label, &r, o)?,
    };
    let mut report = json!({
        "suite": suite_name,
        "pair": loaded.label,
        "tol": r.tol,
        "pass": res.pass,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut report, res.report) {
        if o.suite != Suite::Schwarz {
            m.insert("M".into(), json!(r.max_degree));
        }
        m.extend(extra);
    }
    let (name, bytes) = match params.format {
        Format::Json => (format!("verify_{suite_name}.json"), json_bytes(&report)),
        Format::Csv => (
            format!("verify_{suite_name}.csv"),
            csv_bytes(&res.header, &res.rows),
        ),
    };
    let mut sink = Sink::new(params.out.clone())?;
    sink.emit(&name, &bytes, true)?;
    if sink.has_dir() {
        println!(
            "suite {suite_name}: {} ({})",
            if res.pass { "PASS" } else { "FAIL" },
            res.summary
        );
    }
    let mut p = json!({
        "suite": suite_name,
        "max_degree": r.max_degree,
        "tol": r.tol,
        "format": format!("{:?}", params.format).to_lowercase(),
    });
    let mut used = vec!["max_degree", "tol"];
    match o.suite {
        Suite::Symmetry => {
            p["points"] = json!(o.points);
            p["radius"] = json!(o.radius.unwrap_or(2.0));
            p["seed"] = json!(o.seed);
        }
        Suite::Schwarz => {
            p["quad_radius"] = json!(r.quad_radius);
            p["quad_nodes"] = json!(r.quad_nodes);
            p["function"] = json!(o.function);
            p["support"] = json!(o.support);
            p["points"] = json!(o.points);
            p["radius"] = json!(o.radius.unwrap_or(3.0));
            p["seed"] = json!(o.seed);
            used.extend(["quad_radius", "quad_nodes"]);
        }
        _ => {}
    }
    sink.finish("verify", inputs(&loaded), object(p), keep_defaulted(&r, &used))?;
    if res.pass {
        Ok(())
    } else {
        Err(CliError::Tolerance {
            message: format!(
                "suite {suite_name} exceeds tolerance {:e}: {}",
                r.tol, res.summary
            ),
        })
    }
}

fn demo_xi(name: &str) -> Vec<f64> {
    match name {
        "trivial" => vec![1.0, -0.5],
        "z2-r2" => vec![1.2, -0.8],
        "so2" => vec![1.0, 0.0],
        _ => vec![1.0, 0.0, 0.0],
    }
}

pub fn demo(name: &str, params: &Params) -> Result<(), CliError> {
    let loaded = load_builtin(name)?;
    let r = resolve(params, None, 0.0);
    let pair = &loaded.pair;
    let n = pair.dimension();
    let xi = demo_xi(name);
    let table = CoefficientTable::build(pair, r.max_degree)?;
    let hs = build_h_series(&table, &xi)?;
    let dir: Vec<f64> = vec![1.0 / (n as f64).sqrt(); n];
    let steps = 80;
    let mut grid = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let s = -2.0 + 4.0 * k as f64 / steps as f64;
        let x: Vec<f64> = dir.iter().map(|d| s * d).collect();
        let phi = eval_spherical_direct(pair, &xi, &x)?;
        let h = eval_h_series(&hs, &pair.rho(&x)?)?.value;
        grid.push((s, x, phi, h, (phi - h).norm()));
    }
    let terms = hs.to_json();
    let (grid_name, grid_bytes, terms_name, terms_bytes) = match params.format {
        Format::Csv => {
            let mut header = vec!["s".to_string()];
            header.extend(coords("x", n));
            header.extend(["phi_re", "phi_im", "h_re", "h_im", "abs_diff"].map(String::from));
            let rows: Vec<Vec<String>> = grid
                .iter()
                .map(|(s, x, phi, h, d)| {
                    let mut row = fmt_f64s(&[*s]);
                    row.extend(fmt_f64s(x));
                    row.extend(fmt_f64s(&[phi.re, phi.im, h.re, h.im, *d]));
                    row
                })
                .collect();
            let term_rows: Vec<Vec<String>> = terms
                .terms
                .iter()
                .map(|t| vec![format!("{:?}", t.j), format!("{:e}", t.re), format!("{:e}", t.im)])
                .collect();
            (
                "grid.csv",
                csv_bytes(&header, &rows),
                "h_terms.csv",
                csv_bytes(&["J", "re", "im"].map(String::from), &term_rows),
            )
        }
        Format::Json => {
            let rows: Vec<Value> = grid
                .iter()
                .map(|(s, x, phi, h, d)| {
                    json!({ "s": s, "x": x, "phi": [phi.re, phi.im], "h": [h.re, h.im], "abs_diff": d })
                })
                .collect();
            let doc = json!({ "pair": loaded.label, "xi": xi, "M": r.max_degree, "rows": rows });
            ("grid.json", json_bytes(&doc), "h_terms.json", json_bytes(&terms))
        }
    };
    let max_diff = grid.iter().map(|g| g.4).fold(0.0, f64::max);
    let mut sink = Sink::new(params.out.clone())?;
    sink.emit(grid_name, &grid_bytes, true)?;
    sink.emit(terms_name, &terms_bytes, false)?;
    if sink.has_dir() {
        println!(
            "demo {name}: {} grid points, max abs_diff {max_diff:e}",
            grid.len()
        );
    }
    sink.finish(
        "demo",
        inputs(&loaded),
        object(json!({
            "name": name,
            "xi": xi,
            "max_degree": r.max_degree,
            "slice": { "from": -2.0, "to": 2.0, "points": steps + 1, "direction": dir },
            "format": format!("{:?}", params.format).to_lowercase(),
        })),
        keep_defaulted(&r, &["max_degree"]),
    )
}
