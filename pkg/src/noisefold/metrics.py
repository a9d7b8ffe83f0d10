"""Recovery and image quality metrics.

SNR/relative error act on arbitrary matrices; PSNR/SSIM act on images
normalized to [0, 1] and are computed on the 8-bit rescale (x255, clamped
to [0, 255], no rounding) so their magnitudes match the usual dB scales.
"""

import math

import numpy as np

SNR_CAP_DB = 300.0
PSNR_CAP_DB = 300.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def rel_error(reference, test):
    """||X - X_hat||_F / ||X||_F."""
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    denom = np.linalg.norm(reference)
    if denom == 0.0:
        raise ValueError("reference matrix is zero; relative error undefined")
    return float(np.linalg.norm(reference - test) / denom)


def snr_db(rel_err):
    """-20 log10(rel_err), capped at 300 dB (the exact-recovery sentinel)."""
    if rel_err < 0:
        raise ValueError("relative error must be non-negative")
    if rel_err == 0.0:
        return SNR_CAP_DB
    return min(-20.0 * math.log10(rel_err), SNR_CAP_DB)


def to_8bit(img):
    """x255 and clamp to [0, 255]; no rounding."""
    return np.clip(np.asarray(img, dtype=np.float64) * 255.0, 0.0, 255.0)


def psnr(reference, test):
    """Peak signal-to-noise ratio on the 8-bit scale, peak 255.

    reference must live in [0, 1]; identical images return the 300 dB
    sentinel.
    """
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ValueError("images must have the same shape")
    if reference.min() < -1e-9 or reference.max() > 1.0 + 1e-9:
        raise ValueError("reference image must be normalized to [0, 1]")
    mse = float(np.mean((to_8bit(reference) - to_8bit(test)) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(255.0**2 / mse), PSNR_CAP_DB)


def _gaussian_kernel(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    half = (size - 1) // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(t**2) / (2.0 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def _windowed_mean(img, kernel):
    win = kernel.shape[0]
    views = np.lib.stride_tricks.sliding_window_view(img, (win, win))
    return np.tensordot(views, kernel, axes=([2, 3], [0, 1]))


def ssim(reference, test):
    """Mean local structural similarity.

    11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, dynamic range
    255 on the 8-bit rescale; local statistics use population weighting and
    the mean runs over fully-interior windows, so images must be at least
    11x11.
    """
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ValueError("images must have the same shape")
    if min(reference.shape) < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {reference.shape}"
        )
    a = to_8bit(reference)
    b = to_8bit(test)
    kernel = _gaussian_kernel()
    mu_a = _windowed_mean(a, kernel)
    mu_b = _windowed_mean(b, kernel)
    var_a = _windowed_mean(a * a, kernel) - mu_a**2
    var_b = _windowed_mean(b * b, kernel) - mu_b**2
    cov = _windowed_mean(a * b, kernel) - mu_a * mu_b
    c1 = (SSIM_K1 * 255.0) ** 2
    c2 = (SSIM_K2 * 255.0) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def bilinear_resize(img, out_shape):
    """Bilinear resample onto out_shape, sampling at pixel centers."""
    img = np.asarray(img, dtype=np.float64)
    out_h, out_w = out_shape
    in_h, in_w = img.shape
    r = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0, in_h - 1)
    c = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0, in_w - 1)
    r0 = np.floor(r).astype(int)
    c0 = np.floor(c).astype(int)
    r1 = np.minimum(r0 + 1, in_h - 1)
    c1 = np.minimum(c0 + 1, in_w - 1)
    fr = (r - r0)[:, None]
    fc = (c - c0)[None, :]
    return ((1 - fr) * (1 - fc) * img[np.ix_(r0, c0)]
            + (1 - fr) * fc * img[np.ix_(r0, c1)]
            + fr * (1 - fc) * img[np.ix_(r1, c0)]
            + fr * fc * img[np.ix_(r1, c1)])
