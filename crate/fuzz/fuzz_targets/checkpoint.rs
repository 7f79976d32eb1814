#![no_main]

use gcls::encoders::Encoder;
use gcls::tensor::checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(tensors) = checkpoint::decode(data) {
        let again = checkpoint::encode(tensors.iter().map(|(n, m)| (n.as_str(), m)));
        assert_eq!(again, data);
        let _ = Encoder::from_checkpoint(tensors);
    }
});
