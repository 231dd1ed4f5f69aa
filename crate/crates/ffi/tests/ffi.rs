use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pimdram::bits::BitRow;
use pimdram::config::load_config;
use pimdram::gsdram::{self, GsConfig};
use pimdram_ffi::*;

struct Sim(*mut PimSim);

impl Sim {
    fn new(profile: &str) -> Sim {
        let name = CString::new(profile).unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(unsafe { pim_sim_new(name.as_ptr(), ptr::null(), &mut p) }, PIM_OK, "{}", last_error());
        Sim(p)
    }

    fn geometry(&self) -> PimGeometry {
        let mut g = PimGeometry::default();
        assert_eq!(unsafe { pim_sim_geometry(self.0, &mut g) }, PIM_OK);
        g
    }

    fn words(&self) -> usize {
        (self.geometry().row_bytes / 8) as usize
    }

    fn set(&self, sub: u32, row: u32, words: &[u64]) -> i32 {
        unsafe { pim_sim_set_row(self.0, 0, sub, row, words.as_ptr(), words.len()) }
    }

    fn get(&self, sub: u32, row: u32) -> Vec<u64> {
        let mut out = vec![0; self.words()];
        assert_eq!(unsafe { pim_sim_get_row(self.0, 0, sub, row, out.as_mut_ptr(), out.len()) }, PIM_OK);
        out
    }

    fn intact(&self) -> bool {
        let mut ok = 0u8;
        assert_eq!(unsafe { pim_sim_reserved_rows_intact(self.0, &mut ok) }, PIM_OK);
        ok == 1
    }
}

impl Drop for Sim {
    fn drop(&mut self) {
        unsafe { pim_sim_free(self.0) }
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(pim_last_error()) }.to_string_lossy().into_owned()
}

fn pattern(n: usize, seed: u64) -> Vec<u64> {
    (0..n as u64).map(|i| (i + seed).wrapping_mul(0x9e37_79b9_7f4a_7c15)).collect()
}

#[test]
fn lifecycle_and_errors() {
    let s = Sim::new("ddr3-1066-rowclone");
    let g = s.geometry();
    assert_eq!((g.chips, g.row_bytes, g.cacheline_bytes), (8, 4096, 64));
    assert!(g.data_rows < g.rows_per_subarray);

    let mut p = ptr::null_mut();
    let bad = CString::new("no-such-profile").unwrap();
    let code = unsafe { pim_sim_new(bad.as_ptr(), ptr::null(), &mut p) };
    assert!(code > 0, "{code}");
    assert!(p.is_null());
    assert!(last_error().contains("no-such-profile"), "{}", last_error());

    assert_eq!(unsafe { pim_sim_new(ptr::null(), ptr::null(), &mut p) }, PIM_NULL_POINTER);
    let not_utf8 = CString::new(vec![0xff, 0xfe]).unwrap();
    assert_eq!(unsafe { pim_sim_new(not_utf8.as_ptr(), ptr::null(), &mut p) }, PIM_INVALID_UTF8);
    assert_eq!(unsafe { pim_sim_geometry(ptr::null(), ptr::null_mut()) }, PIM_NULL_POINTER);
    unsafe { pim_sim_free(ptr::null_mut()) };
}

#[test]
fn overrides_and_config_text() {
    let name = CString::new("ddr3-1066-rowclone").unwrap();
    let kv = CString::new("banks_per_chip = 4\n").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { pim_sim_new(name.as_ptr(), kv.as_ptr(), &mut p) }, PIM_OK, "{}", last_error());
    let s = Sim(p);
    assert_eq!(s.geometry().banks, 4);

    let text = CString::new(load_config("ddr3-1600-buddy", &[]).unwrap().source).unwrap();
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { pim_sim_from_text(text.as_ptr(), &mut q) }, PIM_OK, "{}", last_error());
    let t = Sim(q);
    assert_eq!(t.geometry(), Sim::new("ddr3-1600-buddy").geometry());
}

#[test]
fn rows_round_trip() {
    let s = Sim::new("ddr3-1600-buddy");
    let w = pattern(s.words(), 1);
    assert_eq!(s.set(1, 3, &w), PIM_OK);
    assert_eq!(s.get(1, 3), w);
    // wrong width is a simulator error, so the code is positive
    assert!(s.set(1, 3, &w[1..]) > 0);
    let mut small = vec![0; 4];
    let code = unsafe { pim_sim_get_row(s.0, 0, 1, 3, small.as_mut_ptr(), small.len()) };
    assert_eq!(code, PIM_BUFFER_TOO_SMALL);
    let rows = s.geometry().rows_per_subarray;
    assert!(s.set(0, rows, &w) > 0);
}

#[test]
fn fpm_copy_costs_two_activations() {
    let s = Sim::new("ddr3-1066-rowclone");
    let w = pattern(s.words(), 2);
    assert_eq!(s.set(2, 10, &w), PIM_OK);
    let mut cost = PimCost::default();
    assert_eq!(unsafe { pim_rowclone_fpm(s.0, 0, 2, 10, 11, &mut cost) }, PIM_OK, "{}", last_error());
    assert_eq!(s.get(2, 11), w);
    assert_eq!((cost.elapsed_ns, cost.bus_bytes, cost.commands), (90.0, 0, 3));
    assert!(cost.energy_nj > 0.0);
    assert!(unsafe { pim_rowclone_fpm(s.0, 0, 2, 10, 10, ptr::null_mut()) } > 0);
    assert!(s.intact());
}

#[test]
fn buddy_ops_match_word_oracle() {
    let s = Sim::new("ddr3-1600-buddy");
    let (a, b) = (pattern(s.words(), 3), pattern(s.words(), 99));
    type WordOp = fn(u64, u64) -> u64;
    let oracle: [(u32, WordOp); 7] = [
        (PimOp::Not as u32, |x, _| !x),
        (PimOp::And as u32, |x, y| x & y),
        (PimOp::Or as u32, |x, y| x | y),
        (PimOp::Nand as u32, |x, y| !(x & y)),
        (PimOp::Nor as u32, |x, y| !(x | y)),
        (PimOp::Xor as u32, |x, y| x ^ y),
        (PimOp::Xnor as u32, |x, y| !(x ^ y)),
    ];
    for (op, f) in oracle {
        assert_eq!(s.set(0, 0, &a), PIM_OK);
        assert_eq!(s.set(0, 1, &b), PIM_OK);
        let mut cost = PimCost::default();
        let code = unsafe { pim_buddy_execute(s.0, op, 0, 0, 0, 1, 2, &mut cost) };
        assert_eq!(code, PIM_OK, "{}", last_error());
        let want: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| f(x, y)).collect();
        assert_eq!(s.get(0, 2), want, "op {op}");
        assert_eq!(cost.bus_bytes, 0);
    }
    assert!(s.intact());
    assert_eq!(unsafe { pim_buddy_execute(s.0, 7, 0, 0, 0, 1, 2, ptr::null_mut()) }, PIM_BAD_OP);
    // operands in different subarrays are rejected by the simulator
    let data = s.geometry().data_rows;
    assert!(unsafe { pim_buddy_execute(s.0, 1, 0, 0, 0, data, 2, ptr::null_mut()) } > 0);
}

#[test]
fn throughput_scales_with_banks() {
    let s = Sim::new("ddr3-1600-buddy");
    let g = s.geometry();
    let mut one = 0.0;
    let mut four = 0.0;
    assert_eq!(unsafe { pim_buddy_throughput(s.0, PimOp::And as u32, 1, &mut one) }, PIM_OK);
    assert_eq!(unsafe { pim_buddy_throughput(s.0, PimOp::And as u32, 4, &mut four) }, PIM_OK);
    // AND takes four overlapped 49 ns cycles per row
    let want = g.row_bytes as f64 / (4.0 * 49e-9) / (1u64 << 30) as f64;
    assert!((one - want).abs() < 1e-9, "{one} vs {want}");
    assert!((four - 4.0 * one).abs() < 1e-9);
}

#[test]
fn trace_text_runs() {
    let s = Sim::new("ddr3-1066-rowclone");
    let w = pattern(s.words(), 4);
    assert_eq!(s.set(0, 1, &w), PIM_OK);
    let text = CString::new("ACT 0 0 1\nACT 0 0 2\nPRE 0\n").unwrap();
    let mut cost = PimCost::default();
    assert_eq!(unsafe { pim_sim_run_trace(s.0, text.as_ptr(), &mut cost) }, PIM_OK, "{}", last_error());
    assert_eq!(s.get(0, 2), w);
    assert_eq!((cost.elapsed_ns, cost.commands), (90.0, 3));
    let bad = CString::new("ACT 0 0 1\nJUMP\n").unwrap();
    assert!(unsafe { pim_sim_run_trace(s.0, bad.as_ptr(), ptr::null_mut()) } > 0);
    assert!(last_error().contains("line 2"), "{}", last_error());
}

#[test]
fn gather_returns_strided_values() {
    let s = Sim::new("ddr3-1600-buddy");
    let sim = load_config("ddr3-1600-buddy", &[]).unwrap();
    let cfg = GsConfig::new(8, 3, 3).unwrap();
    let layout = sim.geometry.column_layout();
    let mut row = BitRow::zeros(sim.geometry.row_bits());
    for chip in 0..8 {
        for col in 0..layout.columns {
            let v = gsdram::value_at(chip, col, &cfg);
            row.set_field(layout.bit_offset(chip, col), sim.geometry.column_width, v);
        }
    }
    assert_eq!(s.set(0, 5, row.words()), PIM_OK);
    let mut out = [0u64; 8];
    let mut cost = PimCost::default();
    let code = unsafe { pim_gsdram_gather(s.0, 0, 0, 5, 7, 1, out.as_mut_ptr(), out.len(), &mut cost) };
    assert_eq!(code, PIM_OK, "{}", last_error());
    assert_eq!(out, [1, 9, 17, 25, 33, 41, 49, 57]);
    assert_eq!(cost.bus_bytes, 64);
    let code = unsafe { pim_gsdram_gather(s.0, 0, 0, 5, 0, 3, out.as_mut_ptr(), out.len(), ptr::null_mut()) };
    assert_eq!(code, PIM_OK);
    assert_eq!(out, [24, 25, 26, 27, 28, 29, 30, 31]);
    assert_eq!(
        unsafe { pim_gsdram_gather(s.0, 0, 0, 5, 0, 3, out.as_mut_ptr(), 7, ptr::null_mut()) },
        PIM_BUFFER_TOO_SMALL
    );
    // the bank is closed again, so an invalid pattern leaves it usable
    assert!(unsafe { pim_gsdram_gather(s.0, 0, 0, 5, 1 << 20, 0, out.as_mut_ptr(), 8, ptr::null_mut()) } > 0);
    assert_eq!(unsafe { pim_gsdram_gather(s.0, 0, 0, 5, 7, 0, out.as_mut_ptr(), 8, ptr::null_mut()) }, PIM_OK);
    assert_eq!(out[1], 8);
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(crate_dir().join("include/pimdram.h")).unwrap();
    for name in [
        "pim_last_error",
        "pim_sim_new",
        "pim_sim_from_text",
        "pim_sim_free",
        "pim_sim_geometry",
        "pim_sim_set_row",
        "pim_sim_get_row",
        "pim_sim_run_trace",
        "pim_rowclone_fpm",
        "pim_buddy_execute",
        "pim_buddy_throughput",
        "pim_gsdram_gather",
        "pim_sim_reserved_rows_intact",
        "typedef struct PimSim PimSim",
        "PIM_OP_XNOR = 6",
        "#define PIM_BAD_OP -5",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// Compiles `c_example.c` against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    // integration tests live in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libpimdram_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = std::env::temp_dir().join(format!("pimdram-c-{}", std::process::id()));
    let status = Command::new("cc")
        .arg(crate_dir().join("tests/c_example.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg("-Wall")
        .arg("-Werror")
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    std::fs::remove_file(&out).unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(stdout, "fpm 90 ns\nand ok\nerror 1\n");
}
