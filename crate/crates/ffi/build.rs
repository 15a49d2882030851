use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("HYPERGRAM_H".to_owned()),
        autogen_warning: Some("/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */".to_owned()),
        cpp_compat: true,
        usize_is_size_t: true,
        documentation: true,
        style: cbindgen::Style::Type,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            rename_variants: cbindgen::RenameRule::ScreamingSnakeCase,
            ..Default::default()
        },
        ..Default::default()
    };

    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include/hypergram.h"));
        }
        // keep building when the header cannot be regenerated, e.g. while
        // the source has syntax errors
        Err(e) => println!("cargo:warning=cbindgen failed: {e}"),
    }
}
