import numpy as np
import pytest
import torch

from tsepi.audio.core import AudioClip
from tsepi.errors import InvalidArgumentError
from tsepi.models.gammatone import (GammatoneFilterbank, build_kernels, encode, erb, erb_rate, init_center_freqs,
                                    magnitude_responses)

from conftest import sine

FS = 16000


def test_erb_values():
    assert erb(0.0) == pytest.approx(24.7)
    assert erb(1000.0) == pytest.approx(132.639)
    values = erb(np.linspace(0, 8000, 50))
    assert np.all(np.diff(values) > 0)
    assert torch.isclose(erb(torch.tensor(1000.0, dtype=torch.double)), torch.tensor(132.639, dtype=torch.double))
    with pytest.raises(InvalidArgumentError):
        erb(-1.0)
    with pytest.raises(InvalidArgumentError):
        erb(torch.tensor([-1.0]))


def test_init_center_freqs():
    assert np.allclose(init_center_freqs(2, 50.0, 7800.0), [50.0, 7800.0])
    fc = init_center_freqs(64, 50.0, 7800.0)
    spacing = np.diff(erb_rate(fc))
    assert np.allclose(spacing, spacing[0], rtol=0, atol=1e-9)
    assert np.all(np.diff(init_center_freqs(512, 50.0, 7800.0)) > 0)
    with pytest.raises(InvalidArgumentError):
        init_center_freqs(8, 7800.0, 50.0)
    with pytest.raises(InvalidArgumentError):
        init_center_freqs(8, 50.0, 9000.0)


def _kernel(fc, length, bw=1.019, order=4, phase=0.0):
    return build_kernels(torch.tensor([fc], dtype=torch.double), torch.tensor([bw], dtype=torch.double),
                         torch.ones(1, dtype=torch.double), torch.tensor([phase], dtype=torch.double),
                         length, FS, order)[:, 0].numpy()


def _fft_peak_hz(kernel, n_fft=4096):
    spectrum = np.abs(np.fft.rfft(kernel, n=n_fft))
    return np.argmax(spectrum) * FS / n_fft


def test_kernels_have_unit_norm():
    fc = torch.from_numpy(init_center_freqs(16))
    kernels = build_kernels(fc, torch.full((16,), 1.019, dtype=torch.double), torch.ones(16, dtype=torch.double),
                            torch.zeros(16, dtype=torch.double), 32, FS)
    assert kernels.shape == (32, 16)
    assert torch.allclose(kernels.norm(dim=0), torch.ones(16, dtype=torch.double), atol=1e-6)


def test_long_kernel_peaks_at_its_centre_frequency():
    assert abs(_fft_peak_hz(_kernel(2000.0, 512)) - 2000.0) <= FS / 4096


# 32 taps span two milliseconds, so low centre frequencies see a truncated envelope
@pytest.mark.parametrize('fc, erbs', [(500.0, 1.5), (1000.0, 1.0), (2000.0, 1.0), (3000.0, 1.0), (4000.0, 1.0)])
def test_short_kernel_peak_tolerance(fc, erbs):
    assert abs(_fft_peak_hz(_kernel(fc, 32)) - fc) <= erbs * erb(fc)


def test_short_kernel_peak_error_shrinks_with_frequency():
    low = abs(_fft_peak_hz(_kernel(500.0, 32)) - 500.0)
    high = abs(_fft_peak_hz(_kernel(4000.0, 32)) - 4000.0)
    assert high < low
    assert high <= FS / 4096


def test_first_order_zero_bandwidth_is_a_cosine():
    kernel = _kernel(1000.0, 64, bw=0.0, order=1)
    cosine = np.cos(2 * np.pi * 1000.0 * np.arange(64) / FS)
    assert np.allclose(kernel, cosine / np.linalg.norm(cosine))


def test_out_of_band_centre_frequency_is_rejected():
    for fc in (0.0, 8000.0):
        with pytest.raises(InvalidArgumentError):
            _kernel(fc, 32)


def test_kernel_gradients_match_finite_differences():
    torch.manual_seed(0)
    fc = torch.tensor([300.0, 1500.0, 4000.0], dtype=torch.double, requires_grad=True)
    bw = torch.tensor([1.0, 1.2, 0.8], dtype=torch.double, requires_grad=True)
    amp = torch.tensor([1.0, 0.5, 2.0], dtype=torch.double, requires_grad=True)
    phase = torch.tensor([0.0, 0.3, -1.0], dtype=torch.double, requires_grad=True)
    weights = torch.randn(32, 3, dtype=torch.double)

    def loss(fc, bw, amp, phase):
        return (build_kernels(fc, bw, amp, phase, 32, FS) * weights).sum()

    assert torch.autograd.gradcheck(loss, (fc, bw, amp, phase), eps=1e-6, atol=1e-6, rtol=1e-3)


def test_fixed_bank_has_no_parameters_and_stays_put():
    torch.manual_seed(0)
    bank = GammatoneFilterbank(8, 32, learnable=False)
    assert list(bank.parameters()) == []
    head = torch.nn.Conv1d(8, 1, 1)
    before = {name: value.clone() for name, value in bank.state_dict().items()}
    optimizer = torch.optim.Adam(head.parameters(), lr=1e-2)
    for _ in range(3):
        optimizer.zero_grad()
        head(torch.relu(bank(torch.randn(2, 400)))).pow(2).mean().backward()
        optimizer.step()
    for name, value in bank.state_dict().items():
        assert torch.equal(value, before[name])


def test_learnable_bank_moves_under_training():
    torch.manual_seed(0)
    bank = GammatoneFilterbank(8, 32, learnable=True)
    assert {name for name, _ in bank.named_parameters()} == {'fc_raw', 'bw_raw', 'amp', 'phase'}
    before = bank.params()
    optimizer = torch.optim.Adam(bank.parameters(), lr=1e-2)
    optimizer.zero_grad()
    torch.relu(bank(torch.randn(2, 400))).pow(2).mean().backward()
    assert all(p.grad is not None and torch.any(p.grad != 0) for p in bank.parameters())
    optimizer.step()
    after = bank.params()
    assert not np.allclose(before.fc, after.fc)
    assert not np.allclose(before.amp, after.amp)


def test_initial_bank_matches_the_erb_layout():
    bank = GammatoneFilterbank(16, 32, learnable=True)
    params = bank.params()
    assert np.allclose(params.fc, init_center_freqs(16), rtol=1e-4)
    assert np.allclose(params.bw_scale, 1.019, rtol=1e-5)


def test_constraint_maps_keep_parameters_legal():
    bank = GammatoneFilterbank(4, 32, learnable=True)
    with torch.no_grad():
        bank.fc_raw.copy_(torch.tensor([-40.0, -5.0, 5.0, 40.0]))
        bank.bw_raw.copy_(torch.tensor([-20.0, -1.0, 1.0, 20.0]))
    fc = bank.center_frequencies()
    assert torch.all(fc > 0) and torch.all(fc < FS / 2)
    assert torch.all(bank.bandwidth_scales() > 0)
    assert torch.all(torch.isfinite(bank.kernels()))


def test_encoding_is_linear_before_relu():
    torch.manual_seed(0)
    bank = GammatoneFilterbank(8, 32, learnable=False)
    x = torch.randn(1, 800)
    assert torch.allclose(bank(3.0 * x), 3.0 * bank(x), atol=1e-4)


def test_encode_frame_count_and_zero_input():
    bank = GammatoneFilterbank(8, 32, learnable=False)
    encoded = encode(AudioClip(np.zeros(1000), FS), bank)
    assert encoded.stride == 16
    assert encoded.n_frames == (1000 - 32) // 16 + 1
    assert np.all(encoded.features == 0)
    with pytest.raises(InvalidArgumentError):
        encode(AudioClip(np.zeros(20), FS), bank)


def test_tone_excites_its_own_filter():
    bank = GammatoneFilterbank(16, 256, learnable=False)
    params = bank.params()
    for k in (4, 8, 12):
        tone = torch.from_numpy(sine(params.fc[k], seconds=0.25).samples).float().unsqueeze(0)
        with torch.no_grad():
            energy = bank(tone).pow(2).sum(dim=-1)[0]
        assert int(torch.argmax(energy)) == k


def test_encode_accepts_params(tone):
    bank = GammatoneFilterbank(8, 32, learnable=False)
    from_bank = encode(tone, bank)
    from_params = encode(tone, bank.params())
    assert np.allclose(from_bank.features, from_params.features, atol=1e-4)


def test_magnitude_responses_shape():
    params = GammatoneFilterbank(8, 32, learnable=False).params()
    responses = magnitude_responses(params, n_fft=512)
    assert responses.shape == (8, 257)
    assert np.all(responses >= 0)
