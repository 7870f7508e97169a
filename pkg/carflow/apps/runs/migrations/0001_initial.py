# Generated by Django 4.2.5 on 2026-10-18 09:12

from django.db import migrations, models
import django.db.models.deletion
import django.utils.timezone


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(max_length=32)),
                ('scenario_path', models.CharField(blank=True, max_length=1024)),
                ('seed', models.BigIntegerField(default=0)),
                ('output_dir', models.CharField(max_length=1024)),
                ('status', models.CharField(choices=[('ok', 'Ok'), ('failed', 'Failed')], default='ok', max_length=10)),
                ('created', models.DateTimeField(default=django.utils.timezone.now)),
                ('details', models.JSONField(blank=True, default=dict)),
            ],
            options={
                'ordering': ['-created'],
                'indexes': [models.Index(fields=['created'], name='runs_simula_created_4f1a2b_idx'), models.Index(fields=['command', 'created'], name='runs_simula_command_9c3d7e_idx')],
            },
        ),
        migrations.CreateModel(
            name='EmittedFile',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=255)),
                ('sha256', models.CharField(max_length=64)),
                ('size', models.BigIntegerField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='files', to='runs.simulationrun')),
            ],
            options={
                'ordering': ['name'],
                'unique_together': {('run', 'name')},
            },
        ),
    ]
