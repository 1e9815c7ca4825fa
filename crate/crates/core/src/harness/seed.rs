const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct Fnv(u64);

impl Fnv {
    fn bytes(&mut self, b: &[u8]) -> &mut Self {
        for &x in b {
            self.0 ^= u64::from(x);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }

    fn field(&mut self, b: &[u8]) -> &mut Self {
        // length prefix keeps adjacent string fields unambiguous
        self.bytes(&(b.len() as u64).to_le_bytes()).bytes(b)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the identifiers of one experiment cell into a 64-bit seed.
///
/// FNV-1a over a length-prefixed encoding of the fields, finished with the
/// splitmix64 mixer. The encoding is fixed, so seeds are stable across
/// releases.
pub fn derive_seed(
    master: u64,
    experiment: &str,
    model: &str,
    trial: usize,
    alpha: Option<f64>,
) -> u64 {
    let mut h = Fnv(FNV_OFFSET);
    h.bytes(&master.to_le_bytes())
        .field(experiment.as_bytes())
        .field(model.as_bytes())
        .bytes(&(trial as u64).to_le_bytes());
    match alpha {
        None => h.bytes(&[0]),
        Some(a) => h.bytes(&[1]).bytes(&a.to_bits().to_le_bytes()),
    };
    splitmix64(h.0)
}
