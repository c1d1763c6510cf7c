#![no_main]

use infheat_core::io::FieldDump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(dump) = FieldDump::decode(data) {
        let n: usize = dump.header.dims.iter().product();
        assert_eq!(dump.values.len(), n);
        let back = FieldDump::decode(&dump.encode()).expect("re-encoded dump decodes");
        assert_eq!(back.header, dump.header);
        assert_eq!(
            back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            dump.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
});
