use wickspde_cli::config::{FieldKind, TimeKind};
use wickspde_cli::{emit_config, parse_config, Command};

#[test]
fn minimal_heat_document_gets_documented_defaults() {
    let cfg = parse_config("command = \"solve-heat\"\n", None).unwrap();
    assert_eq!(cfg.command, Command::SolveHeat);
    assert_eq!(cfg.solver.threshold, 10.0);
    assert_eq!(cfg.solver.dt, 1e-3);
    assert_eq!(cfg.field.past_horizon, 8.0);
    assert_eq!(cfg.field.kind, FieldKind::Heat);
}

#[test]
fn command_line_supplies_or_must_match_the_command() {
    let cfg = parse_config("", Some(Command::RenormDivergence)).unwrap();
    assert_eq!(cfg.command, Command::RenormDivergence);
    let err = parse_config("command = \"isometry\"\n", Some(Command::SolveHeat)).unwrap_err();
    assert!(err.to_string().contains("command line names solve-heat"), "{err}");
    assert!(parse_config("", None).is_err());
}

#[test]
fn emitted_config_reparses_to_the_same_config() {
    let docs = [
        "command = \"solve-heat\"\n",
        r#"
command = "wick-convergence"
seed = 99
[subordinator]
kind = "compound-poisson"
rate = 2.0
law = { type = "uniform", low = 0.1, high = 0.4 }
[field]
kind = "wave"
cutoffs = [2, 4]
[norm]
alpha = -0.2
time = "sup"
[wick]
order = 3
"#,
        r#"
command = "stationary-check"
[subordinator]
kind = "gamma"
shape = 1.0
rate = 2.0
[field]
kind = "damped-wave-stationary"
times = [0.25, 0.75]
"#,
        r#"
command = "solve-wave"
[field]
kind = "wave"
cutoffs = [2]
[wick]
order = 3
[solver]
epsilon = 0.2
cutoff = 8
u0 = { mode = [1, 1], amplitude = 0.1 }
"#,
    ];
    for doc in docs {
        let cfg = parse_config(doc, None).unwrap();
        let again = parse_config(&emit_config(&cfg).unwrap(), None).unwrap();
        assert_eq!(cfg, again, "round trip of\n{doc}");
    }
    let wave = parse_config(docs[1], None).unwrap();
    assert_eq!(wave.norm.time, TimeKind::Sup);
}

/// One violation per document; each must be rejected with a message naming it.
#[test]
fn adversarial_configs_are_rejected_with_the_violated_inequality() {
    let cases: &[(&str, &str)] = &[
        ("command = \"solve-heat\"\n[wick]\norder = 3\n", "only k = 2"),
        ("command = \"solve-heat\"\n[solver]\ngamma = 2.0\n", "2/(1−ε)"),
        ("command = \"solve-heat\"\n[solver]\ngamma = 25.0\n", "γ < 2/ε"),
        ("command = \"solve-heat\"\n[solver]\ndelta = 0.45\n", "0 < δ < 2/γ − ε"),
        ("command = \"solve-heat\"\n[solver]\ndelta = -0.1\n", "0 < δ < 2/γ − ε"),
        ("command = \"solve-heat\"\n[solver]\nepsilon = 0.6\n", "0 < ε < 1/2"),
        ("command = \"solve-heat\"\n[solver]\ndt = 0.0\n", "δt > 0"),
        ("command = \"solve-heat\"\n[solver]\nthreshold = -1.0\n", "R > 0"),
        ("command = \"solve-heat\"\n[solver]\nsign = 2.0\n", "sign must be +1 or −1"),
        ("command = \"solve-heat\"\n[solver]\ncutoff = 4\n", "M ≥ k·N"),
        ("command = \"solve-heat\"\n[field]\nkind = \"wave\"\n", "needs field.kind"),
        ("command = \"solve-wave\"\n[field]\nkind = \"wave\"\n[wick]\norder = 3\n[solver]\nepsilon = 0.3\n", "1/(2(k−1))"),
        ("command = \"solve-wave\"\n[field]\nkind = \"wave\"\n[wick]\norder = 1\n", "at least 2"),
        ("command = \"wick-convergence\"\n[norm]\ngamma = 1.5\nepsilon = 0.2\n", "γ ≥ 2/((1−ε)k)"),
        ("command = \"wick-convergence\"\n[norm]\nalpha = -0.3\nepsilon = 0.2\n", "α < −εk"),
        ("command = \"wick-convergence\"\n[norm]\nepsilon = 0.6\n", "0 < ε < 1/k"),
        ("command = \"wick-convergence\"\n[norm]\ntime = \"sup\"\n", "sup-in-time norms are not available"),
        ("command = \"wick-convergence\"\n[field]\nkind = \"wave\"\n[norm]\nalpha = 0.1\n", "α < 0"),
        ("command = \"wick-convergence\"\n[norm]\ngamma = -1.0\n", "γ > 0"),
        ("command = \"covariance\"\n[wick]\nensemble = 50\n", "ensemble ≥ 100"),
        ("command = \"covariance\"\n[wick]\nensemble = 200\n[field]\ntimes = [0.5, 2.0]\n", "field.times"),
        ("command = \"stationary-check\"\n", "needs field.kind"),
        (
            "command = \"stationary-check\"\n[field]\nkind = \"heat-stationary\"\n[subordinator]\nkind = \"compound-poisson\"\nrate = 1.0\nlaw = { type = \"log-tail\" }\n",
            "logarithmic moment",
        ),
        ("command = \"isometry\"\n[subordinator]\nkind = \"poisson\"\nrate = -1.0\n", "rate"),
        ("command = \"isometry\"\n[subordinator]\nkind = \"gamma\"\nshape = 1.0\nrate = 1.0\ntruncation = 0.0\n", "trunc"),
        ("command = \"isometry\"\n[field]\ncutoffs = [8, 4]\n", "strictly increasing"),
        ("command = \"isometry\"\n[field]\nhorizon = 0.0\n", "T > 0"),
        ("command = \"isometry\"\n[solver]\ndtt = 0.1\n", "unknown field"),
        ("command = \"isometry\"\nbogus = 1\n", "unknown field"),
        ("command = \"not-a-command\"\n", "unknown variant"),
    ];
    for (doc, needle) in cases {
        let err = parse_config(doc, None).expect_err(doc).to_string();
        assert!(err.contains(needle), "document\n{doc}\nrejected with `{err}`, expected `{needle}`");
    }
}
