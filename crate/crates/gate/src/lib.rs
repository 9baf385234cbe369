//! The acceptance gate lives under `tests/`.
