use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ctransport(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ctransport"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn manufactured_writes_two_row_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = ctransport(
        &["manufactured", "--levels", "4,8", "--degree", "1", "--epsilon", "1", "--sigma", "50", "--out", &out],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["table1_3d.csv", "table2_1d.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "h,grad_error,grad_rate,l2_error,l2_rate");
        assert_eq!(lines[1].split(',').filter(|c| c.is_empty()).count(), 2);
        assert_eq!(lines[2].split(',').filter(|c| !c.is_empty()).count(), 5);
        assert!(lines[1].starts_with("2.50000e-1,"));
    }
    assert!(dir.path().join("tissue_t1.0000.vtk").exists());
    assert!(dir.path().join("vessel_t1.0000.vtk").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = ctransport(&["manufactured", "--levels", "4", "--out", &out_arg(d.path())], &[]);
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["table1_3d.csv", "table2_1d.csv", "tissue_t1.0000.vtk", "vessel_t1.0000.vtk"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = ctransport(&["manufactured", "--levels", "4", "--out", &out_arg(a.path())], &[("SOLVER_THREADS", "1")]);
    let ob = ctransport(&["manufactured", "--levels", "4", "--sequential", "--out", &out_arg(b.path())], &[("SOLVER_THREADS", "3")]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    assert_eq!(
        fs::read(a.path().join("table1_3d.csv")).unwrap(),
        fs::read(b.path().join("table1_3d.csv")).unwrap()
    );
}

#[test]
fn diagonal_writes_table_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctransport(
        &["diagonal", "--case", "1", "--levels", "4,8", "--fine", "16", "--out", &out_arg(dir.path())],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("table3_case1.csv")).unwrap();
    assert!(text.starts_with("h,err3d,rate3d,err1d,rate1d"));
    assert_eq!(text.lines().count(), 3);
    for t in ["0.0125", "0.5000", "1.0000"] {
        assert!(dir.path().join(format!("case1_tissue_t{t}.vtk")).exists());
        assert!(dir.path().join(format!("case1_vessel_t{t}.vtk")).exists());
    }
}

#[test]
fn missed_band_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctransport(
        &["manufactured", "--levels", "4,8", "--degree", "2", "--check", "--out", &out_arg(dir.path())],
        &[],
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "command = run\nmesh_size = 3\n").unwrap();
    let o = ctransport(&["run", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mesh_size"));

    let o = ctransport(&["diagonal", "--case", "4"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = ctransport(&["manufactured", "--sigma", "10"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = ctransport(&["manufactured"], &[("SOLVER_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
    let o = ctransport(&["run", "--config", "/nonexistent/file.cfg"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_command_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "# short graded-permeability run\ncommand = run\nlevels = 4\nfinal_time = 0.25\nsnapshots = 0, 0.25\ngamma = 0, 0.05, 0.1\nr_min = 0.05\nr_max = 0.08\nbeta = 8\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = ctransport(&["run", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("vessel mass at T"));
    assert!(out.join("tissue_t0.0000.vtk").exists());
    assert!(out.join("vessel_t0.2500.vtk").exists());
}

#[test]
fn vessel_outside_the_box_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, format!("command = run\np1 = 0.48, 0.48, 0.48\nout = {}\n", dir.path().display())).unwrap();
    let o = ctransport(&["run", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
