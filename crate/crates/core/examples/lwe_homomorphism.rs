use encctl::homcrypt::wire::{deserialize_ciphertext, serialize_ciphertext};
use encctl::homcrypt::{keygen, BackendParams, Encryptor, Evaluator, LweParams};
use num_bigint::BigInt;

fn main() -> encctl::Result<()> {
    let params = BackendParams::Lwe(LweParams::new(512, 1 << 16, 16, [42; 32])?);
    let mut enc = Encryptor::new(keygen(&params)?, 1);
    let ev = Evaluator::new(params.public());

    let (a, b) = (enc.encrypt(1234)?, enc.encrypt(-56)?);
    let lin = ev.add(&ev.scalar_mul(&BigInt::from(3), &a)?, &ev.scalar_mul(&BigInt::from(-7), &b)?)?;
    println!("3*1234 - 7*(-56) = {}", enc.decrypt(&lin)?);
    println!("noise budget fresh {:.2} bits, after {:.2} bits", enc.noise_budget(&a)?, enc.noise_budget(&lin)?);

    // Z_N is centered: N/2 - 1 + 1 wraps to -N/2
    let wrap = ev.add(&enc.encrypt((1 << 15) - 1)?, &enc.encrypt(1)?)?;
    println!("wrap-around: {}", enc.decrypt(&wrap)?);

    let bytes = serialize_ciphertext(&lin);
    let back = deserialize_ciphertext(&bytes)?;
    println!("{} bytes on the wire, round trip equal: {}", bytes.len(), back == lin);
    println!("fresh: {} / {}", a.is_fresh(), lin.is_fresh());
    Ok(())
}
