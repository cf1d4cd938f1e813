use std::{env, fs, path::PathBuf};

use dsp_core::corpus;
use dsp_core::emitter::emit_single;
use dsp_core::pipeline::compile;

fn main() {
    let out = PathBuf::from(env::var_os("OUT_DIR").unwrap());
    for (file, source) in corpus::ALL {
        let program = compile(source).unwrap_or_else(|ds| panic!("{file}: {ds:?}"));
        let stem = file.trim_end_matches(".dsp");
        fs::write(out.join(format!("{stem}.rs")), emit_single(&program.program)).unwrap();
    }
    println!("cargo:rerun-if-changed=../../corpus");
    println!("cargo:rerun-if-changed=../core/src");
}
