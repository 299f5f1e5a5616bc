//! Support for the acceptance target, which runs after every other suite
//! in the workspace.

use std::path::PathBuf;

/// The `condiff` binary built next to the running test executable.
///
/// `cargo test --workspace` builds it for the CLI suites; on its own this
/// package does not, so build `condiff-cli` first.
pub fn condiff_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    // target/<profile>/deps/<test> -> target/<profile>/condiff
    let bin = exe.parent()?.parent()?.join(format!("condiff{}", std::env::consts::EXE_SUFFIX));
    bin.is_file().then_some(bin)
}
