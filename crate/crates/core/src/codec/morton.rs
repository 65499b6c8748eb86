//! 3D Morton (Z-order) codes.
//!
//! Bit `3k` of a code is bit `k` of x, `3k+1` of y and `3k+2` of z, so the
//! three bits taken at any octree level form the child index
//! `x + 2y + 4z`. Coordinates up to 21 bits fit in a `u64`.

/// Spread the low 21 bits of `v` so they occupy every third bit.
fn spread(v: u32) -> u64 {
    let mut x = v as u64 & 0x1f_ffff;
    x = (x | (x << 32)) & 0x1f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x1f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

fn compact(v: u64) -> u32 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x | (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x >> 8)) & 0x1f_0000_ff00_00ff;
    x = (x | (x >> 16)) & 0x1f_0000_0000_ffff;
    x = (x | (x >> 32)) & 0x1f_ffff;
    x as u32
}

pub fn encode(x: u32, y: u32, z: u32) -> u64 {
    spread(x) | (spread(y) << 1) | (spread(z) << 2)
}

pub fn decode(code: u64) -> (u32, u32, u32) {
    (compact(code), compact(code >> 1), compact(code >> 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(x: u32, y: u32, z: u32) -> u64 {
        let mut code = 0u64;
        for bit in 0..21 {
            code |= (((x >> bit) & 1) as u64) << (3 * bit);
            code |= (((y >> bit) & 1) as u64) << (3 * bit + 1);
            code |= (((z >> bit) & 1) as u64) << (3 * bit + 2);
        }
        code
    }

    #[test]
    fn unit_axes() {
        assert_eq!(encode(1, 0, 0), 1);
        assert_eq!(encode(0, 1, 0), 2);
        assert_eq!(encode(0, 0, 1), 4);
        assert_eq!(encode(1, 1, 1), 7);
        assert_eq!(encode(2, 0, 0), 8);
    }

    proptest! {
        #[test]
        fn matches_bitwise_interleave(x in 0u32..1 << 21, y in 0u32..1 << 21, z in 0u32..1 << 21) {
            let code = encode(x, y, z);
            prop_assert_eq!(code, naive(x, y, z));
            prop_assert_eq!(decode(code), (x, y, z));
        }
    }
}
