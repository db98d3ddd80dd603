"""chamauth: chameleon collision signatures and decentralized two-factor
avatar authentication with virtual-physical tracing.

The package is organized around the scheme's lifecycle:

- :mod:`chamauth.group_backend` - bilinear groups (curve and toy backends)
  with operation counting;
- :mod:`chamauth.chameleon` - the six-algorithm collision signature;
- :mod:`chamauth.biometric` - synthetic iris codes and challenge
  watermarking;
- :mod:`chamauth.identity` - identity tokens, the IDP, ledger, registry;
- :mod:`chamauth.protocol` - one-party and two-party authentication with
  session-key agreement;
- :mod:`chamauth.tracing` - whistleblower bundles and identity disclosure.
"""

from .group_backend import OpCounter, SystemParams, measure, setup, toy_setup

__all__ = ["SystemParams", "OpCounter", "measure", "setup", "toy_setup"]

__version__ = "0.1.0"
