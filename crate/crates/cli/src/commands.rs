//! The four subcommands. Everything prints with 17 significant digits so
//! outputs are reproducible bit for bit and round-trip through parsing.

use std::io::Write;

use pcscs_core::optimize::{self, OptimizedPoint};
use pcscs_core::security::{self, PhaseErrorCertificate};
use pcscs_core::sim::{self, z_score};
use pcscs_core::{
    ChannelParams, KeyRateResult, Mode, ProtocolParams, SearchSpec, SimConfig, Tallies,
};

use crate::config::{fmt17, CliError, Settings};

pub const CSV_HEADER: &str =
    "loss_db,distance_km,n_windows,mu_opt,p_est_opt,key_rate,key_length,e_bit,e_ph_bound,s_large,s_small";

/// Evaluates one channel point: fixed parameters are honored, missing ones
/// optimized over the default search box.
fn solve_point(
    ch: &ChannelParams,
    n: f64,
    eps_total: f64,
    f_ec: f64,
    mu: Option<f64>,
    p_est: Option<f64>,
    mode: Mode,
) -> Result<OptimizedPoint, CliError> {
    let mut spec = SearchSpec::default();
    if let Some(mu) = mu {
        spec.mu_range = (mu, mu);
    }
    if let Some(p) = p_est {
        spec.p_est_range = (p, p);
    }
    Ok(optimize::optimize_point(
        ch, n, eps_total, f_ec, &spec, mode,
    )?)
}

fn write_output(out: &Option<String>, content: &str) -> Result<(), CliError> {
    match out.as_deref() {
        None | Some("-") => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Io {
            path: path.to_string(),
            source,
        }),
    }
}

fn describe_result(lines: &mut String, r: &KeyRateResult) {
    lines.push_str(&format!("key_rate      = {}\n", fmt17(r.rate)));
    lines.push_str(&format!("key_length    = {}\n", fmt17(r.key_length)));
    lines.push_str(&format!("e_bit         = {}\n", fmt17(r.e_bit)));
    lines.push_str(&format!("e_ph_bound    = {}\n", fmt17(r.e_ph_bound)));
    lines.push_str(&format!("eps_total     = {}\n", fmt17(r.eps_total)));
}

pub fn rate(s: &Settings) -> Result<i32, CliError> {
    let ch = s.channel()?;
    let mode = s.mode;
    if mode == Mode::Finite && !s.n.is_finite() {
        return Err(CliError::Usage(
            "finite mode needs a finite --n (or pass --mode asymptotic)".into(),
        ));
    }
    let point = solve_point(&ch, s.n, s.eps_total, s.f_ec, s.mu, s.p_est, mode)?;
    let cr = pcscs_core::channel::click_rates(point.mu, &ch);

    let mut text = String::new();
    text.push_str(&format!("loss_db       = {}\n", fmt17(s.loss_db)));
    text.push_str(&format!("distance_km   = {}\n", fmt17(ch.distance_km())));
    text.push_str(&format!(
        "mode          = {}\n",
        match mode {
            Mode::Finite => "finite",
            Mode::Asymptotic => "asymptotic",
        }
    ));
    text.push_str(&format!(
        "n_windows     = {}\n",
        if mode == Mode::Asymptotic {
            "inf".into()
        } else {
            fmt17(s.n)
        }
    ));
    text.push_str(&format!("mu            = {}\n", fmt17(point.mu)));
    text.push_str(&format!("p_est         = {}\n", fmt17(point.p_est)));
    describe_result(&mut text, &point.result);
    text.push_str(&format!("s_large       = {}\n", fmt17(cr.s_large)));
    text.push_str(&format!("s_small       = {}\n", fmt17(cr.s_small)));
    write_output(&s.out, &text)?;
    Ok(0)
}

pub fn sweep(s: &Settings) -> Result<i32, CliError> {
    let spec = SearchSpec::default();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for &n in &s.n_list {
        let mode = if !n.is_finite() || (s.mode_explicit && s.mode == Mode::Asymptotic) {
            Mode::Asymptotic
        } else {
            Mode::Finite
        };
        let base = s.channel_at(0.0)?;
        let curve = optimize::rate_distance_curve(
            &base,
            &s.losses,
            if mode == Mode::Finite { n } else { 1.0 },
            s.eps_total,
            s.f_ec,
            &spec,
            mode,
        )?;
        for c in &curve {
            let cr = pcscs_core::channel::click_rates(c.point.mu, &s.channel_at(c.loss_db)?);
            let n_field = if mode == Mode::Asymptotic {
                "inf".into()
            } else {
                fmt17(n)
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                fmt17(c.loss_db),
                fmt17(c.distance_km),
                n_field,
                fmt17(c.point.mu),
                fmt17(c.point.p_est),
                fmt17(c.point.result.rate),
                fmt17(c.point.result.key_length),
                fmt17(c.point.result.e_bit),
                fmt17(c.point.result.e_ph_bound),
                fmt17(cr.s_large),
                fmt17(cr.s_small),
            ));
        }
    }
    write_output(&s.out, &csv)?;
    Ok(0)
}

fn describe_certificate(lines: &mut String, label: &str, cert: &PhaseErrorCertificate) {
    lines.push_str(&format!("{label}.term_bit    = {}\n", fmt17(cert.term_bit)));
    lines.push_str(&format!(
        "{label}.term_cross  = {}\n",
        fmt17(cert.term_cross)
    ));
    lines.push_str(&format!("{label}.term_oo     = {}\n", fmt17(cert.term_oo)));
    lines.push_str(&format!("{label}.n_ph_bar    = {}\n", fmt17(cert.n_ph_bar)));
}

fn describe_tallies(lines: &mut String, label: &str, t: &Tallies) {
    lines.push_str(&format!("{label}.n_sig       = {}\n", fmt17(t.n_sig)));
    lines.push_str(&format!("{label}.n_est       = {}\n", fmt17(t.n_est)));
    lines.push_str(&format!("{label}.n_est_bit   = {}\n", fmt17(t.n_est_bit)));
    lines.push_str(&format!(
        "{label}.n_sig_bit_e = {}\n",
        fmt17(t.n_sig_bit_err)
    ));
}

/// Runs the Monte Carlo simulator, then certifies both the simulated and
/// the analytically expected tallies side by side.
pub fn simulate(s: &Settings) -> Result<i32, CliError> {
    let ch = s.channel()?;
    if !(s.n.is_finite() && s.n.fract() == 0.0 && s.n >= 1.0) {
        return Err(CliError::Usage(format!(
            "simulate needs an integer window count, got {}",
            fmt17(s.n)
        )));
    }
    // Missing free parameters are optimized at this channel point first.
    let point = solve_point(&ch, s.n, s.eps_total, s.f_ec, s.mu, s.p_est, Mode::Finite)?;
    let (mu, p_est) = (point.mu, point.p_est.max(1e-12));
    let protocol = ProtocolParams::new(mu, p_est, s.n, s.f_ec, s.eps_total)?;
    let eps = protocol.component_epsilon();

    let cfg = SimConfig::new(s.n as u64, protocol, ch, s.seed)?;
    let st = sim::simulate(&cfg);
    let simulated = sim::tallies_to_engine(&st);
    let analytic = security::analytic_tallies(mu, p_est, &ch, s.n)?;

    let mut text = String::new();
    text.push_str(&format!("loss_db       = {}\n", fmt17(s.loss_db)));
    text.push_str(&format!("n_windows     = {}\n", fmt17(s.n)));
    text.push_str(&format!("mu            = {}\n", fmt17(mu)));
    text.push_str(&format!("p_est         = {}\n", fmt17(p_est)));
    text.push_str(&format!("seed          = {}\n", s.seed));
    text.push_str(&format!("n_left        = {}\n", st.n_left_clicks));
    text.push_str(&format!("n_right       = {}\n", st.n_right_clicks));
    text.push_str(&format!("n_double      = {}\n", st.n_double_clicks));
    text.push_str(&format!("n_no_click    = {}\n", st.n_no_click));
    describe_tallies(&mut text, "simulated", &simulated);
    describe_tallies(&mut text, "analytic ", &analytic);

    let cert_sim = security::phase_error_bound(&simulated, &protocol, eps)?;
    let cert_ana = security::phase_error_bound(&analytic, &protocol, eps)?;
    describe_certificate(&mut text, "simulated", &cert_sim);
    describe_certificate(&mut text, "analytic ", &cert_ana);

    let res_sim = security::key_length(&simulated, &cert_sim, &protocol);
    let res_ana = security::key_length(&analytic, &cert_ana, &protocol);
    text.push_str(&format!("simulated.key_rate   = {}\n", fmt17(res_sim.rate)));
    text.push_str(&format!("analytic .key_rate   = {}\n", fmt17(res_ana.rate)));
    write_output(&s.out, &text)?;
    Ok(0)
}

/// Statistical cross-validation: z-scores of the simulated tallies
/// against the analytic expectations on a loss grid. Exit code 2 when any
/// |z| exceeds the threshold.
pub fn validate(s: &Settings) -> Result<i32, CliError> {
    let losses = if s.losses.is_empty() {
        vec![10.0, 20.0, 30.0]
    } else {
        s.losses.clone()
    };
    if !(s.n.is_finite() && s.n.fract() == 0.0 && s.n >= 1.0) {
        return Err(CliError::Usage(format!(
            "validate needs an integer window count, got {}",
            fmt17(s.n)
        )));
    }
    let n = s.n as u64;
    let mu = s.mu.unwrap_or(0.05);
    let p_est = s.p_est.unwrap_or(0.1);

    let mut text = String::new();
    let mut all_ok = true;
    text.push_str(&format!(
        "validating {} windows per point, mu = {}, p_est = {}, |z| <= {}\n",
        n,
        fmt17(mu),
        fmt17(p_est),
        s.z_max
    ));
    for (i, &loss) in losses.iter().enumerate() {
        let ch = s.channel_at(loss)?;
        let protocol = ProtocolParams::new(mu, p_est, n as f64, s.f_ec, s.eps_total)?;
        let cfg = SimConfig::new(n, protocol, ch, s.seed.wrapping_add(i as u64))?;
        let t = sim::simulate(&cfg);
        let cr = pcscs_core::channel::click_rates(mu, &ch);
        let checks = [
            ("clicks", t.n_left_clicks + t.n_right_clicks, cr.total()),
            ("est_bit_errors", t.n_est_bit, p_est * cr.s_small),
            (
                "sig_bit_errors",
                t.n_sig_bit_err,
                (1.0 - p_est) * cr.s_small,
            ),
        ];
        for (what, observed, p) in checks {
            let z = z_score(observed, n, p);
            let ok = z.abs() <= s.z_max;
            all_ok &= ok;
            text.push_str(&format!(
                "{:>5.1} dB {:<15} observed {:>12} expected {:>16.1} z {:>+7.2} {}\n",
                loss,
                what,
                observed,
                n as f64 * p,
                z,
                if ok { "ok" } else { "FAIL" }
            ));
        }
    }
    text.push_str(if all_ok {
        "validation passed\n"
    } else {
        "validation FAILED\n"
    });
    write_output(&s.out, &text)?;
    Ok(if all_ok { 0 } else { 2 })
}
