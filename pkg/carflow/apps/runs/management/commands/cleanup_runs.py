from datetime import timedelta

from django.core.management.base import BaseCommand, CommandError
from django.db import transaction
from django.utils import timezone

from ...models import RunStatus, SimulationRun


class Command(BaseCommand):
    help = "Clean up old simulation run records"

    def add_arguments(self, parser):
        parser.add_argument(
            "--days",
            type=int,
            help="Delete runs older than this many days (default: keep all)",
        )
        parser.add_argument(
            "--keep-recent",
            type=int,
            help="Keep only the most recent N runs",
        )
        parser.add_argument(
            "--command",
            help="Only clean up runs of this command (micro, macro, sweep, platoon, equilibria)",
        )
        parser.add_argument(
            "--failed-only",
            action="store_true",
            help="Only delete failed runs",
        )
        parser.add_argument(
            "--dry-run",
            action="store_true",
            help="Show what would be deleted without actually deleting",
        )
        parser.add_argument(
            "--force",
            action="store_true",
            help="Skip confirmation prompt",
        )

    def runs_to_delete(self, options):
        queryset = SimulationRun.objects.all()
        if options["command"]:
            queryset = queryset.filter(command=options["command"])

        if options["days"]:
            cutoff_date = timezone.now() - timedelta(days=options["days"])
            queryset = queryset.filter(created__lt=cutoff_date)
        elif options["keep_recent"] is not None:
            # IDs of the most recent N runs
            keep_ids = list(queryset.order_by("-created").values_list("id", flat=True)[: options["keep_recent"]])
            queryset = queryset.exclude(id__in=keep_ids)

        if options["failed_only"]:
            queryset = queryset.filter(status=RunStatus.FAILED)
        return queryset

    def handle(self, *args, **options):
        if not options["days"] and options["keep_recent"] is None:
            raise CommandError("You must specify either --days or --keep-recent option")

        if options["days"] and options["keep_recent"] is not None:
            raise CommandError("You cannot use both --days and --keep-recent options together")

        queryset = self.runs_to_delete(options)
        total_to_delete = queryset.count()

        self.stdout.write("\n" + "=" * 50)
        self.stdout.write("DELETION SUMMARY")
        self.stdout.write("=" * 50)
        if options["days"]:
            self.stdout.write(f"Deleting runs older than {options['days']} days")
        else:
            self.stdout.write(f"Keeping only the most recent {options['keep_recent']} runs")
        if options["failed_only"]:
            self.stdout.write("Note: only failed runs are deleted")
        self.stdout.write("")

        if total_to_delete > 0:
            self.stdout.write(self.style.WARNING(f"  SimulationRun: {total_to_delete:,} records"))
        self.stdout.write(f"Total runs to delete: {total_to_delete:,}")

        if total_to_delete == 0:
            self.stdout.write(self.style.SUCCESS("No records to delete."))
            return

        if options["dry_run"]:
            self.stdout.write(self.style.SUCCESS("\nDRY RUN - No records were actually deleted."))
            return

        if not options["force"]:
            self.stdout.write("")
            confirm = input("Are you sure you want to delete these runs? [y/N]: ")
            if confirm.lower() not in ["y", "yes"]:
                self.stdout.write("Operation cancelled.")
                return

        with transaction.atomic():
            # Emitted files cascade with their run
            deleted_count, per_model = self.runs_to_delete(options).delete()

        self.stdout.write("")
        self.stdout.write(
            self.style.SUCCESS(
                f"Successfully deleted {per_model.get('runs.SimulationRun', 0):,} runs "
                f"({deleted_count:,} records including emitted files)."
            )
        )
        self.stdout.write(f"\nRemaining runs: {SimulationRun.objects.count():,}")
