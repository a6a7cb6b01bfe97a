//! Helpers shared by the `genkernels`, `proxy` and `bench` binaries.

use bbdgemm_core::bench::{naive_percall, PerCallGemm};

pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
}

/// Pins the calling thread to one CPU so timings are not disturbed by
/// migrations. Returns false where unsupported or refused.
#[cfg(target_os = "linux")]
pub fn pin_current_thread(cpu: usize) -> bool {
    // SAFETY: cpu_set_t is plain data; the CPU_* helpers only touch the set
    // passed to them and sched_setaffinity reads it.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        libc::CPU_SET(cpu, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set) == 0
    }
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current_thread(_cpu: usize) -> bool {
    false
}

/// Which per-call GEMM the batched kernels are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Baseline {
    /// The in-repo reference GEMM.
    Naive,
    /// `cblas_dgemm` from the system OpenBLAS (needs the `external-blas` feature).
    External,
}

impl Baseline {
    pub fn gemm(self) -> Result<PerCallGemm, String> {
        match self {
            Baseline::Naive => Ok(naive_percall),
            #[cfg(feature = "external-blas")]
            Baseline::External => Ok(blas::cblas_percall),
            #[cfg(not(feature = "external-blas"))]
            Baseline::External => Err("built without the `external-blas` feature".into()),
        }
    }
}

#[cfg(feature = "external-blas")]
pub mod blas {
    use bbdgemm_core::Layout;
    use std::os::raw::c_int;

    const CBLAS_ROW_MAJOR: c_int = 101;
    const CBLAS_COL_MAJOR: c_int = 102;
    const CBLAS_NO_TRANS: c_int = 111;

    #[link(name = "openblas")]
    extern "C" {
        fn cblas_dgemm(
            layout: c_int,
            trans_a: c_int,
            trans_b: c_int,
            m: c_int,
            n: c_int,
            k: c_int,
            alpha: f64,
            a: *const f64,
            lda: c_int,
            b: *const f64,
            ldb: c_int,
            beta: f64,
            c: *mut f64,
            ldc: c_int,
        );
    }

    /// `C := alpha*A*B + beta*C` through OpenBLAS; `C` is `n x m`.
    #[allow(clippy::too_many_arguments)]
    pub fn cblas_percall(
        layout: Layout,
        n: usize,
        m: usize,
        k: usize,
        alpha: f64,
        a: &[f64],
        lda: usize,
        b: &[f64],
        ldb: usize,
        beta: f64,
        c: &mut [f64],
        ldc: usize,
    ) {
        let order = match layout {
            Layout::ColMajor => CBLAS_COL_MAJOR,
            Layout::RowMajor => CBLAS_ROW_MAJOR,
        };
        let int = |v: usize| c_int::try_from(v).expect("dimension fits in a C int");
        // SAFETY: the caller passes matrices that hold their full extent at
        // the given leading dimensions (checked by the batched descriptors).
        unsafe {
            cblas_dgemm(
                order,
                CBLAS_NO_TRANS,
                CBLAS_NO_TRANS,
                int(n),
                int(m),
                int(k),
                alpha,
                a.as_ptr(),
                int(lda),
                b.as_ptr(),
                int(ldb),
                beta,
                c.as_mut_ptr(),
                int(ldc),
            );
        }
    }
}
