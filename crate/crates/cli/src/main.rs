use std::io::Write;

fn main() {
    let code = {
        let mut out = std::io::stdout().lock();
        let code = dogfight_cli::run(std::env::args_os(), &mut out);
        let _ = out.flush();
        code
    };
    std::process::exit(code);
}
