//! Rust source emission for fully unrolled batched kernels.
//!
//! Each kernel is a single loop over the batch. The loop body loads every
//! element of `A` and `B`, accumulates every element of `C` in registers,
//! applies `alpha`/`beta` and stores the result. There are no loops over
//! the matrix dimensions. Variable names follow `vA_r_c`, `vB_r_c`,
//! `rC_r_c`, `vC_r_c` where `r`/`c` are the row and column of the element.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::manifest::KernelManifest;
use super::pressure::{estimate_pressure, MachineModel};
use crate::error::{Error, Result};
use crate::spec::{AccessKind, KernelSpec, Operand, DEFAULT_MAX_DIM};

/// Path through which generated code refers to this crate.
const CRATE_PATH: &str = "::bbdgemm_core";

pub const KERNELS_FILE: &str = "kernels.rs";
pub const DISPATCH_FILE: &str = "dispatch.rs";

const HEADER: &str = "// @generated by bbdgemm-core codegen. Do not edit.\n";

struct Operands {
    spec: KernelSpec,
}

impl Operands {
    fn ld(which: Operand) -> &'static str {
        match which {
            Operand::A => "lda",
            Operand::B => "ldb",
            Operand::C => "ldc",
        }
    }

    fn span(which: Operand) -> &'static str {
        match which {
            Operand::A => "sizeA",
            Operand::B => "sizeB",
            Operand::C => "sizeC",
        }
    }

    /// Index expression of element `(row, col)` of operand `which` for batch
    /// element `e`.
    fn addr(&self, which: Operand, row: usize, col: usize) -> String {
        let ld = Self::ld(which);
        let (outer, inner) = match self.spec.layout {
            crate::spec::Layout::ColMajor => (col, row),
            crate::spec::Layout::RowMajor => (row, col),
        };
        let local = format!("({outer}*{ld}+{inner})");
        match self.spec.access(which) {
            AccessKind::Constant => format!("{which}[{local}]"),
            AccessKind::Strided => format!("{which}[e*{}+{local}]", Self::span(which)),
            AccessKind::Indexed => format!("{which}[e][{local}]"),
        }
    }

    fn bind(&self, out: &mut String, which: Operand) {
        let ld = Self::ld(which);
        let (parts, extra) = match self.spec.access(which) {
            AccessKind::Constant => ("constant_parts", String::new()),
            AccessKind::Strided => ("strided_parts", format!(", {}", Self::span(which))),
            AccessKind::Indexed => ("indexed_parts", String::new()),
        };
        let _ = writeln!(out, "    let ({which}, {ld}{extra}) = {which}.{parts}();");
    }
}

/// Emits the Rust source of one kernel.
pub fn generate_kernel_source(spec: &KernelSpec) -> Result<String> {
    generate_kernel_source_bounded(spec, DEFAULT_MAX_DIM)
}

pub fn generate_kernel_source_bounded(spec: &KernelSpec, max_dim: usize) -> Result<String> {
    spec.shape.check_bound(max_dim)?;
    let (n, m, k) = (spec.shape.n(), spec.shape.m(), spec.shape.k());
    let ops = Operands { spec: *spec };
    let hoist_a = spec.access_a == AccessKind::Constant;
    let name = spec.name();
    let mut s = String::with_capacity(64 * (n * m * k + n * k + k * m + 4 * n * m) + 1024);

    let a = spec.dims(Operand::A);
    let b = spec.dims(Operand::B);
    let c = spec.dims(Operand::C);
    let kind = |w| format!("{:?}", spec.access(w));
    let _ = writeln!(s, "// N = {n}, M = {m}, K = {k}");
    let _ = writeln!(s, "// Matrix A: {}x{}, {}", a.rows, a.cols, kind(Operand::A));
    let _ = writeln!(s, "// Matrix B: {}x{}, {}", b.rows, b.cols, kind(Operand::B));
    let _ = writeln!(s, "// Matrix C: {}x{}, {}", c.rows, c.cols, kind(Operand::C));
    let _ = writeln!(s, "#[inline(never)]");
    let _ = writeln!(
        s,
        "pub fn {name}(E: usize, alpha: f64, A: &BatchedOperand<'_>, B: &BatchedOperand<'_>, beta: f64, C: &mut BatchedOperandMut<'_>) {{"
    );
    s.push_str("    if E == 0 {\n        return;\n    }\n");
    for which in Operand::ALL {
        ops.bind(&mut s, which);
    }

    if hoist_a {
        for col in 0..k {
            for row in 0..n {
                let _ = writeln!(s, "    let vA_{row}_{col} = {};", ops.addr(Operand::A, row, col));
            }
        }
    }

    s.push_str("    // vectorize(assume_safety): iterations over e are independent\n");
    s.push_str("    for e in 0..E {\n");
    if !hoist_a {
        for col in 0..k {
            for row in 0..n {
                let _ = writeln!(
                    s,
                    "        let vA_{row}_{col} = {};",
                    ops.addr(Operand::A, row, col)
                );
            }
        }
    }
    for col in 0..m {
        for row in 0..k {
            let _ = writeln!(
                s,
                "        let vB_{row}_{col} = {};",
                ops.addr(Operand::B, row, col)
            );
        }
    }

    for col in 0..m {
        for row in 0..n {
            let _ = writeln!(s, "        let mut rC_{row}_{col} = 0.0_f64;");
            for t in 0..k {
                let _ = writeln!(
                    s,
                    "        rC_{row}_{col} = vA_{row}_{t} * vB_{t}_{col} + rC_{row}_{col};"
                );
            }
            let _ = writeln!(s, "        rC_{row}_{col} = rC_{row}_{col} * alpha;");
        }
    }

    s.push_str("        if beta != 0.0 {\n");
    for col in 0..m {
        for row in 0..n {
            let _ = writeln!(
                s,
                "            let vC_{row}_{col} = {};",
                ops.addr(Operand::C, row, col)
            );
            let _ = writeln!(
                s,
                "            rC_{row}_{col} = vC_{row}_{col} * beta + rC_{row}_{col};"
            );
        }
    }
    s.push_str("        }\n");
    for col in 0..m {
        for row in 0..n {
            let _ = writeln!(s, "        {} = rC_{row}_{col};", ops.addr(Operand::C, row, col));
        }
    }
    s.push_str("    }\n}\n");
    Ok(s)
}

fn check_duplicates(manifest: &KernelManifest) -> Result<()> {
    match manifest.first_duplicate() {
        Some(dup) => Err(Error::DuplicateSpec(dup.name())),
        None => Ok(()),
    }
}

/// Emits the name-to-kernel table and the registry of built names, in
/// manifest order.
pub fn generate_dispatch_source(manifest: &KernelManifest) -> Result<String> {
    check_duplicates(manifest)?;
    let mut s = String::from(HEADER);
    let _ = writeln!(
        s,
        "pub static KERNELS: &[{CRATE_PATH}::runtime::KernelEntry] = &["
    );
    for spec in &manifest.entries {
        let name = spec.name();
        let _ = writeln!(
            s,
            "    {CRATE_PATH}::runtime::KernelEntry {{ name: \"{name}\", kernel: {name} }},"
        );
    }
    s.push_str("];\n\npub static REGISTRY: &[&str] = &[\n");
    for spec in &manifest.entries {
        let _ = writeln!(s, "    \"{}\",", spec.name());
    }
    s.push_str("];\n");
    Ok(s)
}

/// Emits every kernel of the manifest into one source text.
pub fn generate_kernels_file(manifest: &KernelManifest, max_dim: usize) -> Result<String> {
    check_duplicates(manifest)?;
    let bodies = generate_parallel(&manifest.entries, max_dim)?;
    let mut s = String::from(HEADER);
    let _ = writeln!(
        s,
        "use {CRATE_PATH}::runtime::{{BatchedOperand, BatchedOperandMut}};"
    );
    for body in bodies {
        s.push('\n');
        s.push_str(&body);
    }
    Ok(s)
}

fn generate_parallel(specs: &[KernelSpec], max_dim: usize) -> Result<Vec<String>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    if specs.len() < 64 || workers == 1 {
        return specs
            .iter()
            .map(|s| generate_kernel_source_bounded(s, max_dim))
            .collect();
    }
    let chunk = specs.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|s| generate_kernel_source_bounded(s, max_dim))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(specs.len());
        for h in handles {
            out.extend(h.join().expect("codegen worker panicked")?);
        }
        Ok(out)
    })
}

/// Writes `path` via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GeneratedFiles {
    pub kernels: PathBuf,
    pub dispatch: PathBuf,
    pub parts: usize,
    pub kernel_count: usize,
}

/// Source bytes per generated part file. rustc slows down sharply on
/// single source files beyond a few megabytes.
const PART_BYTES: usize = 2 << 20;

/// Generates `dispatch.rs` plus the kernel sources for `manifest` into
/// `out_dir`.
///
/// Kernels are split over `kernels_NNN.rs` part files; `kernels.rs` pulls
/// them in with `include!` relative to `OUT_DIR`, so the output is meant to
/// be included from a build script's output directory.
pub fn write_generated(manifest: &KernelManifest, out_dir: &Path, max_dim: usize) -> Result<GeneratedFiles> {
    check_duplicates(manifest)?;
    let bodies = generate_parallel(&manifest.entries, max_dim)?;
    let dispatch_src = generate_dispatch_source(manifest)?;
    fs::create_dir_all(out_dir)?;

    let mut parts: Vec<String> = Vec::new();
    let mut current = String::from(HEADER);
    for body in bodies {
        if current.len() + body.len() > PART_BYTES && current.len() > HEADER.len() {
            parts.push(std::mem::replace(&mut current, String::from(HEADER)));
        }
        current.push('\n');
        current.push_str(&body);
    }
    parts.push(current);

    let mut index = String::from(HEADER);
    let _ = writeln!(
        index,
        "use {CRATE_PATH}::runtime::{{BatchedOperand, BatchedOperandMut}};"
    );
    for (i, part) in parts.iter().enumerate() {
        let file = format!("kernels_{i:03}.rs");
        write_atomic(&out_dir.join(&file), part.as_bytes())?;
        let _ = writeln!(index, "include!(concat!(env!(\"OUT_DIR\"), \"/{file}\"));");
    }

    let kernels = out_dir.join(KERNELS_FILE);
    let dispatch = out_dir.join(DISPATCH_FILE);
    write_atomic(&kernels, index.as_bytes())?;
    write_atomic(&dispatch, dispatch_src.as_bytes())?;
    Ok(GeneratedFiles {
        kernels,
        dispatch,
        parts: parts.len(),
        kernel_count: manifest.len(),
    })
}

/// Register-pressure report for every manifest entry as CSV.
pub fn write_pressure_report(manifest: &KernelManifest, model: MachineModel, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "name",
        "n",
        "m",
        "k",
        "access",
        "scalar_live",
        "vector_live",
        "predicted_spills",
    ])?;
    let mut seen = HashSet::new();
    for spec in manifest.entries.iter().filter(|s| seen.insert(**s)) {
        let r = estimate_pressure(spec, model);
        w.write_record([
            spec.name(),
            spec.shape.n().to_string(),
            spec.shape.m().to_string(),
            spec.shape.k().to_string(),
            spec.access_suffix(),
            r.scalar_live.to_string(),
            r.vector_live.to_string(),
            r.predicted_spills.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Layout;

    fn spec(layout: Layout, n: usize, m: usize, k: usize, acc: &str) -> KernelSpec {
        KernelSpec::from_parts(layout, n, m, k, acc).unwrap()
    }

    fn count(src: &str, pred: impl Fn(&str) -> bool) -> usize {
        src.lines().map(str::trim).filter(|l| pred(l)).count()
    }

    #[test]
    fn addressing_forms() {
        let src = generate_kernel_source(&spec(Layout::ColMajor, 2, 2, 2, "cis")).unwrap();
        assert!(src.contains("A[(0*lda+0)]"), "{src}");
        assert!(src.contains("B[e][(0*ldb+0)]"), "{src}");
        assert!(src.contains("C[e*sizeC+(0*ldc+0)]"), "{src}");
        // element (1,0) of a column-major C sits at column 0, row 1
        assert!(src.contains("let vC_1_0 = C[e*sizeC+(0*ldc+1)];"), "{src}");
        assert!(src.contains("rC_0_0 = vA_0_1 * vB_1_0 + rC_0_0;"), "{src}");
        assert!(src.contains("pub fn bbdgemm_ColMajor_2_2_2_cis("));
    }

    #[test]
    fn row_major_addressing() {
        let src = generate_kernel_source(&spec(Layout::RowMajor, 2, 3, 2, "sic")).unwrap();
        assert!(src.contains("let vA_1_0 = A[e*sizeA+(1*lda+0)];"), "{src}");
        assert!(src.contains("let vB_0_2 = B[e][(0*ldb+2)];"), "{src}");
        assert!(src.contains("C[(1*ldc+2)] = rC_1_2;"), "{src}");
    }

    #[test]
    fn deterministic() {
        let s = spec(Layout::RowMajor, 4, 3, 2, "ssi");
        assert_eq!(
            generate_kernel_source(&s).unwrap(),
            generate_kernel_source(&s).unwrap()
        );
    }

    #[test]
    fn unit_kernel_statement_counts() {
        let src = generate_kernel_source(&spec(Layout::ColMajor, 1, 1, 1, "ccc")).unwrap();
        assert_eq!(count(&src, |l| l.starts_with("rC_0_0 = vA_")), 1);
        assert_eq!(count(&src, |l| l.ends_with("* alpha;")), 1);
        assert_eq!(count(&src, |l| l.contains("* beta +")), 1);
        assert_eq!(count(&src, |l| l.starts_with("C[")), 1);
    }

    #[test]
    fn statement_counts_follow_closed_forms() {
        for acc in ["cis", "sss", "iic", "csi"] {
            let s = spec(Layout::ColMajor, 5, 3, 4, acc);
            let (n, m, k) = (5, 3, 4);
            let src = generate_kernel_source(&s).unwrap();
            let loop_start = src.find("for e in 0..E").unwrap();
            let (pre, body) = src.split_at(loop_start);
            assert_eq!(
                count(body, |l| l.starts_with("rC_") && l.contains(" * vB_")),
                n * m * k
            );
            assert_eq!(count(body, |l| l.ends_with("* alpha;")), n * m);
            assert_eq!(count(body, |l| l.starts_with("C[")), n * m);
            assert_eq!(count(body, |l| l.starts_with("let vC_")), n * m);
            let a_in_loop = if acc.starts_with('c') { 0 } else { n * k };
            assert_eq!(
                count(body, |l| l.starts_with("let vA_") || l.starts_with("let vB_")),
                a_in_loop + k * m,
                "{acc}"
            );
            assert_eq!(count(pre, |l| l.starts_with("let vA_")), n * k - a_in_loop);
            assert!(!body.contains("for t") && !body.contains("while"));
        }
    }

    #[test]
    fn bound_is_enforced() {
        let s = spec(Layout::ColMajor, 65, 1, 1, "sss");
        assert!(matches!(
            generate_kernel_source(&s),
            Err(Error::ShapeBound { .. })
        ));
        assert!(generate_kernel_source_bounded(&s, 80).is_ok());
    }

    #[test]
    fn no_platform_specific_constructs() {
        let src = generate_kernel_source(&spec(Layout::ColMajor, 4, 4, 4, "iss")).unwrap();
        for banned in ["std::arch", "core::arch", "asm!", "target_feature", "unsafe"] {
            assert!(!src.contains(banned), "{banned}");
        }
    }

    #[test]
    fn dispatch_registry() {
        let m = KernelManifest::new(
            vec![
                spec(Layout::ColMajor, 2, 2, 2, "cis"),
                spec(Layout::ColMajor, 10, 9, 9, "cis"),
                spec(Layout::ColMajor, 20, 9, 10, "csi"),
            ],
            "t",
        );
        let src = generate_dispatch_source(&m).unwrap();
        let registry: Vec<&str> = src
            .split("REGISTRY")
            .nth(1)
            .unwrap()
            .lines()
            .filter_map(|l| l.trim().strip_prefix('"'))
            .map(|l| l.trim_end_matches("\","))
            .collect();
        assert_eq!(
            registry,
            [
                "bbdgemm_ColMajor_2_2_2_cis",
                "bbdgemm_ColMajor_10_9_9_cis",
                "bbdgemm_ColMajor_20_9_10_csi"
            ]
        );
    }

    #[test]
    fn empty_and_duplicate_manifests() {
        let empty = KernelManifest::default();
        let src = generate_dispatch_source(&empty).unwrap();
        assert!(src.contains("pub static REGISTRY: &[&str] = &[\n];"));

        let s = spec(Layout::ColMajor, 2, 2, 2, "cis");
        let dup = KernelManifest::new(vec![s, spec(Layout::RowMajor, 1, 1, 1, "sss"), s], "t");
        match generate_dispatch_source(&dup) {
            Err(Error::DuplicateSpec(name)) => assert_eq!(name, "bbdgemm_ColMajor_2_2_2_cis"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parallel_generation_matches_serial() {
        let entries: Vec<_> = (1..=4)
            .flat_map(|n| (1..=4).flat_map(move |m| (1..=5).map(move |k| (n, m, k))))
            .map(|(n, m, k)| spec(Layout::RowMajor, n, m, k, "isc"))
            .collect();
        assert!(entries.len() >= 64);
        let manifest = KernelManifest::new(entries.clone(), "t");
        let joined = generate_kernels_file(&manifest, 64).unwrap();
        let serial: String = entries
            .iter()
            .map(|s| format!("\n{}", generate_kernel_source(s).unwrap()))
            .collect();
        assert!(joined.ends_with(&serial));
    }
}
