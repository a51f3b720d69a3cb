#![no_main]

use dibi_core::kfile::KernelFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = KernelFile::from_json(text) {
        let _ = file.load();
        let again = KernelFile::from_json(&file.to_json()).expect("written files parse");
        assert_eq!(again.kernels.len(), file.kernels.len());
    }
});
