"""Desk-scale LTE PDCCH laboratory.

Synthesizes control-channel subframes from a simulated eNodeB scheduler,
impairs them with a configurable noise channel, and blind-decodes them
with three competing DCI validation pipelines (falcon, owl, lteye) to
compare their reliability.
"""

__version__ = "0.1.0"
