use std::process::ExitCode;

fn main() -> ExitCode {
    // matrixmultiply reads its own variable; honor ours when that one is unset.
    if let Ok(n) = std::env::var(ipt::scan::THREADS_ENV) {
        if std::env::var_os("MATMUL_NUM_THREADS").is_none() {
            std::env::set_var("MATMUL_NUM_THREADS", n);
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    ExitCode::from(ipt::cli::run(&argv) as u8)
}
