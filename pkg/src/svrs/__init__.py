"""Remote-guidance session backend.

A self-contained network service for guiding a procedure room from afar:
a surround 360° stream plus two spot streams relay from the room to a
remote guide, the guide's telestration events mirror back in an ordered
log, and whole sessions record to a replayable, checksummed file.
"""

__version__ = "0.1.0"
