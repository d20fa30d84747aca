//! 2D FFT on row-major complex buffers.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place 2D transform of a `rows x cols` row-major buffer. Unnormalized in
/// both directions.
pub fn fft2(buf: &mut [Complex64], rows: usize, cols: usize, direction: FftDirection) {
    assert_eq!(buf.len(), rows * cols);
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(cols, direction);
    for row in buf.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft(rows, direction);
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = buf[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            buf[r * cols + c] = column[r];
        }
    }
}
