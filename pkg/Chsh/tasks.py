# tasks.py - Monte Carlo shard tasks
import logging

from celery import group, shared_task
from django.conf import settings

from . import coin, montecarlo

logger = logging.getLogger(__name__)


def map_shards(task, arguments):
    """
    Run one task per argument tuple and return the results in argument order.

    With the celery backend the shards go out to workers as a group, or run
    one by one through task.apply() when CELERY_TASK_ALWAYS_EAGER is set. The
    inline backend calls the task body directly.
    """
    backend = settings.BELLSIM['SHARD_BACKEND']
    if backend == 'celery' and len(arguments) > 1:
        if task.app.conf.task_always_eager:
            return [task.apply(args=args).get() for args in arguments]
        logger.info('Dispatching %d shards of %s through celery', len(arguments), task.name)
        return group(task.s(*args) for args in arguments).apply_async().get()
    return [task(*args) for args in arguments]


@shared_task
def tally_run_shard(payload, pair_label, start, stop):
    """Tally trials [start, stop) of one setting pair of a run."""
    config = montecarlo.RunConfig.from_payload(payload)
    return montecarlo.tally_shard(config, pair_label, start, stop).as_dict()


@shared_task
def tally_selection_shard(payload, class_rates, pair_label, start, stop):
    config = montecarlo.RunConfig.from_payload(payload)
    return montecarlo.tally_selection_shard(config, tuple(class_rates), pair_label, start, stop).as_dict()


@shared_task
def tally_coin_shard(epsilon, seed, start, stop):
    return coin.tally_coin_shard(coin.FaultSpec(epsilon), seed, start, stop).as_dict()
