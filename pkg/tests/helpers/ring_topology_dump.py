"""Build an n-ring and dump each node's endpoint identities.

Every node reports the pipe inodes behind its ring input and output plus
which of its open descriptors are FIFOs; the caller reconstructs the
topology from that. One TOPO line per node on stderr.
"""

import os
import stat
import sys

from pipering.ring import RingSpec, build_ring, reap_children


def fifo_fds() -> list[int]:
    fds = []
    for name in os.listdir("/proc/self/fd"):
        try:
            st = os.fstat(int(name))
        except OSError:
            continue  # the listing descriptor itself
        if stat.S_ISFIFO(st.st_mode):
            fds.append(int(name))
    return sorted(fds)


def main() -> None:
    n = int(sys.argv[1])
    ctx = build_ring(RingSpec(n=n))
    ring_fifos = [fd for fd in fifo_fds() if fd != 2]  # stderr may be a capture pipe
    os.write(
        2,
        (
            f"TOPO node={ctx.index} pid={ctx.self_id} ppid={ctx.parent_id} "
            f"in={os.fstat(ctx.ring_in).st_ino} out={os.fstat(ctx.ring_out).st_ino} "
            f"fifos={','.join(map(str, ring_fifos))}\n"
        ).encode(),
    )
    reap_children(ctx)
    sys.exit(0)


if __name__ == "__main__":
    main()
