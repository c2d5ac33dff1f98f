use brushfem::config::RunConfig;
use brushfem::harness::{run_convergence, write_csv, CSV_HEADER};

const CFG: &str = r#"
[tooth]
preset = "cylinder"

[brush]
base = { x0 = -0.25, x1 = 1.25, depth = 0.5 }
omega_prime = [0.0, 1.0]
family = "linear_gaps"
epsilons = [0.125, 4.0, 0.0625]

[mesh]
h_base = 0.0625
h_tooth = 0.25
h_y = 0.125
"#;

#[test]
fn failing_scale_is_tagged_and_order_kept() {
    let cfg = RunConfig::from_toml_str(CFG).unwrap();
    let rows = run_convergence(&cfg);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].as_ref().unwrap().eps, 0.125);
    assert_eq!(rows[1].as_ref().unwrap_err().0, 4.0);
    assert_eq!(rows[2].as_ref().unwrap().eps, 0.0625);
    for r in [&rows[0], &rows[2]] {
        let r = r.as_ref().unwrap();
        assert!(r.base_err <= 1e-8 && r.teeth_err <= 1e-8 && r.tau_grad_x <= 1e-8);
        assert!(r.note.is_none());
    }
    let mut out = Vec::new();
    write_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[3].starts_with("4e0,,,,,,,,,,error: "));
    assert_eq!(lines[3].split(',').count(), 11);
}
