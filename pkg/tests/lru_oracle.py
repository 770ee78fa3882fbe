"""Reference LRU simulator used as an oracle: a plain list scan, no shared code."""


def simulate(trace, sizes, capacity, high=0.9, low=0.8, admit_limit=None):
    """Replay ``trace`` (object keys) and return the final set of cached keys.

    A hit refreshes recency; a miss inserts the object and, if usage now
    exceeds ``high * capacity``, drops least-recently-used objects until
    usage is at most ``low * capacity``.
    """
    admit_limit = low * capacity if admit_limit is None else admit_limit
    cached = []  # [key, size, last_used]
    clock = 0
    for key in trace:
        clock += 1
        found = [e for e in cached if e[0] == key]
        if found:
            found[0][2] = clock
            continue
        if sizes[key] > admit_limit:
            continue
        cached.append([key, sizes[key], clock])
        used = sum(e[1] for e in cached)
        if used > high * capacity:
            while used > low * capacity:
                victim = min(cached, key=lambda e: e[2])
                cached.remove(victim)
                used -= victim[1]
    return {e[0] for e in cached}
