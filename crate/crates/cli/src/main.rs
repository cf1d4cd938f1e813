use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    // deep recursion in the oracle and in dropping long continuation chains
    let code = std::thread::Builder::new()
        .stack_size(dsp_cli::BIG_STACK)
        .spawn(|| dsp_cli::main_with(std::env::args(), &mut io::stdout().lock(), &mut io::stderr().lock()))
        .expect("spawn main thread")
        .join()
        .unwrap_or(2);
    ExitCode::from(code as u8)
}
